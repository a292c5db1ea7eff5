#pragma once

#include <span>
#include <string_view>
#include <variant>

#include "dbo/netmodel.hpp"
#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// Delivery-based ordering: batching, pacing, delivery-clock tags and a
/// heartbeat-driven ordering buffer.
struct DboScheme {
  Duration delta;
  double kappa = 0.25;
  Duration tau;
};

/// No release or ordering buffer; trades are sequenced on arrival.
struct DirectScheme {};

/// Raw (unbatched, unpaced) delivery, but trades ordered by delivery clock.
struct DirectWithDcScheme {
  Duration tau;
};

/// Perfect-clock baseline: data released at G(x) + th_fwd, trades released
/// at S + th_rev in true time.
struct CloudExScheme {
  Duration th_fwd;
  Duration th_rev;
};

using SchemeKind = std::variant<DboScheme, DirectScheme, DirectWithDcScheme, CloudExScheme>;

std::string_view scheme_name(const SchemeKind& scheme);

/// Throws std::invalid_argument when a scheme parameter is out of range.
void validate_scheme(const SchemeKind& scheme);

/// Whether the scheme stamps trades with delivery clocks and runs the
/// heartbeat-driven ordering buffer.
bool uses_delivery_clock(const SchemeKind& scheme);

/// Heartbeat period for clock-based schemes.
Duration heartbeat_period(const SchemeKind& scheme);

/// CloudEx release time at the participant side.
TimePoint cloudex_delivery(TimePoint arrival, TimePoint generated, Duration th_fwd);

/// CloudEx forward time at the exchange; late trades go out on arrival.
TimePoint cloudex_forward(TimePoint arrival, TimePoint submitted, Duration th_rev);

/// Both directions of one participant's exchange links.
struct LinkTraces {
  const LatencyTrace* market_data;
  const LatencyTrace* uplink;
};

/// Lower bound on the latency of any response-time-fair sequencer for a
/// trade reacting to a point generated at `generated` with response time
/// `rt`: the largest round trip among all participants, where the return
/// leg leaves at generated + forward + rt. Latencies are the in-order
/// (FIFO envelope) latencies of each link.
Duration max_rtt_oracle(TimePoint generated, Duration rt, std::span<const LinkTraces> links);

}  // namespace dbo
