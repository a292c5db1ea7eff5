#include <gtest/gtest.h>

#include "dbo/ces.hpp"
#include "dbo/participants.hpp"

using namespace dbo;

namespace {

std::vector<MarketDataPoint> batch_points(std::size_t n) {
  auto pts = generate_points(Duration::us(40), Duration::us(40 * static_cast<std::int64_t>(n)));
  return pts;
}

}  // namespace

TEST(OnBatchDelivered, SubmitsAtDeliveryPlusRt) {
  MpProfile p;
  p.trade_prob = 1.0;
  p.rt = FixedRt{Duration::us(12)};
  std::mt19937_64 rng(1);
  const auto pts = batch_points(1);
  const auto trades = on_batch_delivered(p, pts, TimePoint::us(1000), rng);
  ASSERT_EQ(trades.size(), 1u);
  EXPECT_EQ(trades[0].submit_at, TimePoint::us(1012));
  EXPECT_EQ(trades[0].trigger, pts[0].id);
  EXPECT_EQ(trades[0].submit_at - trades[0].trigger_delivered_at, trades[0].rt);
}

TEST(OnBatchDelivered, ZeroProbabilityNeverTrades) {
  MpProfile p;
  p.trade_prob = 0.0;
  std::mt19937_64 rng(1);
  const auto pts = batch_points(50);
  for (int k = 0; k < 100; ++k) EXPECT_TRUE(on_batch_delivered(p, pts, TimePoint::us(5), rng).empty());
}

TEST(OnBatchDelivered, UniformRtStaysWithinHorizon) {
  MpProfile p;
  p.trade_prob = 1.0;
  std::mt19937_64 rng(2);
  const auto pts = batch_points(2);
  Duration lo = Duration::max(), hi = Duration::zero();
  for (int k = 0; k < 20'000; ++k)
    for (const auto& t : on_batch_delivered(p, pts, TimePoint::us(100), rng)) {
      lo = std::min(lo, t.rt);
      hi = std::max(hi, t.rt);
      EXPECT_LT(t.rt, Duration::us(20) + Duration::ns(1));
      EXPECT_EQ(t.submit_at - t.trigger_delivered_at, t.rt);
    }
  EXPECT_GE(lo, Duration::us(5));
  EXPECT_LE(hi, Duration::us(20));
  EXPECT_LT(lo, Duration::us(6));
  EXPECT_GT(hi, Duration::us(19));
}

TEST(OnBatchDelivered, TriggersSpreadOverBatchAndSkipMarkers) {
  MpProfile p;
  p.trade_prob = 0.5;
  p.burst = 2;
  std::mt19937_64 rng(3);
  auto pts = batch_points(3);
  pts[1].keepalive = true;
  std::vector<int> hits(3, 0);
  for (int k = 0; k < 10'000; ++k)
    for (const auto& t : on_batch_delivered(p, pts, TimePoint::us(100), rng)) ++hits[t.trigger.value];
  EXPECT_EQ(hits[1], 0);
  // Each real point fires with p = 0.5 and emits 2 trades: ~10'000 hits.
  EXPECT_NEAR(hits[0], 10'000, 400);
  EXPECT_NEAR(hits[2], 10'000, 400);
}

TEST(MakeSlowTrade, SubmitsPastTheHorizon) {
  MpProfile p;
  const auto pts = batch_points(1);
  const auto t = make_slow_trade(p, pts[0], TimePoint::us(500), Duration::us(35));
  EXPECT_EQ(t.submit_at, TimePoint::us(535));
  const auto zero = make_slow_trade(p, pts[0], TimePoint::us(500), Duration::zero());
  EXPECT_EQ(zero.submit_at, TimePoint::us(500));
  EXPECT_THROW(make_slow_trade(p, pts[0], TimePoint::us(500), Duration(-1)), std::invalid_argument);
}

TEST(MpProfile, Validation) {
  MpProfile p;
  EXPECT_NO_THROW(p.validate());
  p.trade_prob = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.trade_prob = 0.5;
  p.rt = UniformRt{Duration::zero(), Duration::us(1)};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.rt = FixedRt{Duration::zero()};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.rt = FixedRt{Duration::us(1)};
  p.burst = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(SubmissionSchedule, CollisionsMoveForwardOneNanosecond) {
  SubmissionSchedule s;
  EXPECT_EQ(s.claim(TimePoint::us(10)), TimePoint::us(10));
  EXPECT_EQ(s.claim(TimePoint::us(10)), TimePoint::us(10) + Duration::ns(1));
  EXPECT_EQ(s.claim(TimePoint::us(10)), TimePoint::us(10) + Duration::ns(2));
  s.forget_before(TimePoint::us(11));
  EXPECT_EQ(s.claim(TimePoint::us(10)), TimePoint::us(10));
}
