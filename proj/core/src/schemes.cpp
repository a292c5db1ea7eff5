#include "dbo/schemes.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbo {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
}  // namespace

std::string_view scheme_name(const SchemeKind& scheme) {
  return std::visit(overloaded{[](const DboScheme&) { return std::string_view("dbo"); },
                               [](const DirectScheme&) { return std::string_view("direct"); },
                               [](const DirectWithDcScheme&) { return std::string_view("direct_dc"); },
                               [](const CloudExScheme&) { return std::string_view("cloudex"); }},
                    scheme);
}

void validate_scheme(const SchemeKind& scheme) {
  std::visit(overloaded{[](const DboScheme& s) {
                          if (s.delta <= Duration::zero()) throw std::invalid_argument("dbo: delta must be positive");
                          if (!(s.kappa > 0.0)) throw std::invalid_argument("dbo: kappa must be positive");
                          if (s.tau <= Duration::zero()) throw std::invalid_argument("dbo: tau must be positive");
                        },
                        [](const DirectScheme&) {},
                        [](const DirectWithDcScheme& s) {
                          if (s.tau <= Duration::zero()) throw std::invalid_argument("direct_dc: tau must be positive");
                        },
                        [](const CloudExScheme& s) {
                          if (s.th_fwd <= Duration::zero() || s.th_rev <= Duration::zero())
                            throw std::invalid_argument("cloudex: thresholds must be positive");
                        }},
             scheme);
}

bool uses_delivery_clock(const SchemeKind& scheme) {
  return std::holds_alternative<DboScheme>(scheme) || std::holds_alternative<DirectWithDcScheme>(scheme);
}

Duration heartbeat_period(const SchemeKind& scheme) {
  if (const auto* d = std::get_if<DboScheme>(&scheme)) return d->tau;
  if (const auto* d = std::get_if<DirectWithDcScheme>(&scheme)) return d->tau;
  throw std::logic_error("scheme has no heartbeats");
}

TimePoint cloudex_delivery(TimePoint arrival, TimePoint generated, Duration th_fwd) {
  return std::max(arrival, generated + th_fwd);
}

TimePoint cloudex_forward(TimePoint arrival, TimePoint submitted, Duration th_rev) {
  return std::max(arrival, submitted + th_rev);
}

Duration max_rtt_oracle(TimePoint generated, Duration rt, std::span<const LinkTraces> links) {
  Duration best = Duration::zero();
  for (const auto& l : links) {
    const Duration fwd = l.market_data->fifo_latency(generated);
    const Duration rev = l.uplink->fifo_latency(generated + fwd + rt);
    best = std::max(best, fwd + rev);
  }
  return best;
}

}  // namespace dbo
