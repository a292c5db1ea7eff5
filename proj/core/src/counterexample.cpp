#include "dbo/counterexample.hpp"

#include <tuple>

namespace dbo {

CounterexamplePair build_lemma1_counterexample(Duration c1, Duration c2, Duration c3, Duration c4) {
  if (c1 < Duration::zero() || c2 < Duration::zero() || c3 < Duration::zero() || c4 < Duration::zero())
    throw std::invalid_argument("counterexample: durations must be non-negative");
  if (c1 == c2) throw std::invalid_argument("counterexample: equal inter-delivery gaps admit no counterexample");
  if (!(c1 < c2)) throw std::invalid_argument("counterexample: requires c1 < c2");
  if (!(c3 > c4)) throw std::invalid_argument("counterexample: requires c3 > c4");
  if (!(c1 + c3 < c2 + c4)) throw std::invalid_argument("counterexample: requires c1 + c3 < c2 + c4");

  const TimePoint base = TimePoint::us(1000);
  const ParticipantId i(0), j(1);
  const PointId x(0), x1(1);
  const ObservedTrade a{i, base, base + c1, base + c1 + c3};
  const ObservedTrade b{j, base, base + c2, base + c2 + c4};

  CounterexamplePair out;
  out.case1 = Scenario{{ScenarioTrade{a, x1, c3}, ScenarioTrade{b, x1, c4}}, RequiredOrder::JFirst};
  out.case2 = Scenario{{ScenarioTrade{a, x, c1 + c3}, ScenarioTrade{b, x, c2 + c4}}, RequiredOrder::IFirst};
  return out;
}

RequiredOrder fair_order(const Scenario& s) {
  const auto& [a, b] = s.trades;
  if (a.trigger != b.trigger) throw std::invalid_argument("fair_order: trades react to different points");
  if (a.rt == b.rt) throw std::invalid_argument("fair_order: equal response times have no fair order");
  return a.rt < b.rt ? RequiredOrder::IFirst : RequiredOrder::JFirst;
}

bool observably_identical(const Scenario& a, const Scenario& b) {
  auto key = [](const ObservedTrade& t) { return std::tie(t.owner, t.d_x, t.d_x_plus1, t.s); };
  for (std::size_t k = 0; k < 2; ++k)
    if (key(a.trades[k].observed) != key(b.trades[k].observed)) return false;
  return true;
}

}  // namespace dbo
