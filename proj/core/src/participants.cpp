#include "dbo/participants.hpp"

#include <stdexcept>

namespace dbo {

void MpProfile::validate() const {
  if (!(trade_prob >= 0.0 && trade_prob <= 1.0)) throw std::invalid_argument("trade_prob must be in [0,1]");
  if (burst == 0) throw std::invalid_argument("burst must be at least 1");
  std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformRt>) {
          if (d.low <= Duration::zero() || d.high < d.low) throw std::invalid_argument("RT range must satisfy 0 < low <= high");
        } else {
          if (d.rt <= Duration::zero()) throw std::invalid_argument("fixed RT must be positive");
        }
      },
      rt);
}

Duration sample_rt(const RtDistribution& dist, std::mt19937_64& rng) {
  return std::visit(
      [&rng](const auto& d) -> Duration {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformRt>) {
          return Duration(std::uniform_int_distribution<std::int64_t>(d.low.count(), d.high.count())(rng));
        } else {
          return d.rt;
        }
      },
      dist);
}

std::vector<RawTrade> on_batch_delivered(const MpProfile& profile, std::span<const MarketDataPoint> points,
                                         TimePoint deliver_time, std::mt19937_64& rng) {
  std::vector<RawTrade> out;
  if (profile.trade_prob <= 0.0) return out;
  std::bernoulli_distribution fires(profile.trade_prob);
  for (const auto& p : points) {
    if (p.keepalive) continue;
    if (!fires(rng)) continue;
    for (unsigned k = 0; k < profile.burst; ++k) {
      const Duration rt = sample_rt(profile.rt, rng);
      out.push_back({profile.id, p.id, rt, deliver_time, deliver_time + rt});
    }
  }
  return out;
}

RawTrade make_slow_trade(const MpProfile& profile, const MarketDataPoint& trigger, TimePoint trigger_delivered_at,
                         Duration rt) {
  if (rt < Duration::zero()) throw std::invalid_argument("response time must be non-negative");
  return {profile.id, trigger.id, rt, trigger_delivered_at, trigger_delivered_at + rt};
}

TimePoint SubmissionSchedule::claim(TimePoint wanted) {
  while (taken_.contains(wanted)) wanted += Duration::ns(1);
  taken_.insert(wanted);
  return wanted;
}

void SubmissionSchedule::forget_before(TimePoint t) { taken_.erase(taken_.begin(), taken_.lower_bound(t)); }

}  // namespace dbo
