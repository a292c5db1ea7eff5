#pragma once

#include <array>
#include <stdexcept>

#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// What an ordering function can observe for one trade: when the data it
/// may have reacted to was delivered and when the trade was submitted.
struct ObservedTrade {
  ParticipantId owner;
  TimePoint d_x;        ///< D(owner, x)
  TimePoint d_x_plus1;  ///< D(owner, x + 1)
  TimePoint s;
};

/// Ground truth for one trade in a scenario.
struct ScenarioTrade {
  ObservedTrade observed;
  PointId trigger;
  Duration rt;
};

enum class RequiredOrder { IFirst, JFirst };

struct Scenario {
  std::array<ScenarioTrade, 2> trades;  ///< [0] = (i,a), [1] = (j,b)
  RequiredOrder required;
};

struct CounterexamplePair {
  Scenario case1;  ///< both trades react to x + 1
  Scenario case2;  ///< both trades react to x
};

/// Two participants i, j see points x and x + 1 with inter-delivery gaps
/// c1 (at i) and c2 (at j), and submit c3 and c4 after x + 1.
/// Requires c1 < c2, c3 > c4 and c1 + c3 < c2 + c4; throws
/// std::invalid_argument otherwise (equal gaps admit no counterexample).
CounterexamplePair build_lemma1_counterexample(Duration c1, Duration c2, Duration c3, Duration c4);

/// Whether the response-time-fair order of a scenario is the one required.
RequiredOrder fair_order(const Scenario& s);

/// True when the two scenarios are indistinguishable from (D, S) events.
bool observably_identical(const Scenario& a, const Scenario& b);

}  // namespace dbo
