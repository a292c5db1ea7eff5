#pragma once

#include <random>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// Response time drawn uniformly from [low, high] (inclusive, ns grid).
struct UniformRt {
  Duration low;
  Duration high;
};

struct FixedRt {
  Duration rt;
};

using RtDistribution = std::variant<UniformRt, FixedRt>;

struct MpProfile {
  ParticipantId id;
  /// Probability that a delivered point triggers a trade.
  double trade_prob = 0.5;
  RtDistribution rt = UniformRt{Duration::us(5), Duration::us(20)};
  /// Trades per triggering point.
  unsigned burst = 1;

  /// Throws std::invalid_argument for probabilities outside [0,1] or
  /// non-positive response times.
  void validate() const;
};

/// A participant's trade before the release buffer tags it.
struct RawTrade {
  ParticipantId owner;
  PointId trigger;
  Duration rt;
  TimePoint trigger_delivered_at;
  TimePoint submit_at;
};

Duration sample_rt(const RtDistribution& dist, std::mt19937_64& rng);

/// Speed trades reacting to a delivered batch: each (non-marker) point
/// independently triggers `burst` trades with probability trade_prob,
/// submitted at deliver_time + RT.
std::vector<RawTrade> on_batch_delivered(const MpProfile& profile, std::span<const MarketDataPoint> points,
                                         TimePoint deliver_time, std::mt19937_64& rng);

/// A trade with an explicit response time, which may exceed the horizon.
RawTrade make_slow_trade(const MpProfile& profile, const MarketDataPoint& trigger, TimePoint trigger_delivered_at,
                         Duration rt);

/// Keeps one participant's submission instants distinct: a trade landing
/// on an already used nanosecond moves forward 1 ns at a time.
class SubmissionSchedule {
 public:
  TimePoint claim(TimePoint wanted);
  /// Drops bookkeeping for instants strictly before `t`.
  void forget_before(TimePoint t);

 private:
  std::set<TimePoint> taken_;
};

}  // namespace dbo
