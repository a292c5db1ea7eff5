#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "dbo/ordering_buffer.hpp"

using namespace dbo;

namespace {

DeliveryClock dc(std::uint64_t point, std::int64_t elapsed_us) { return {PointId(point), Duration::us(elapsed_us)}; }

TradeView trade(std::uint64_t owner, std::uint64_t seq, DeliveryClock tag) {
  return {ParticipantId(owner), TradeSeq(seq), tag, TimePoint::origin()};
}

Heartbeat hb(std::uint64_t owner, DeliveryClock d) { return {ParticipantId(owner), d, TimePoint::origin()}; }

TimePoint gen_40us(PointId x) { return TimePoint::us(40 * static_cast<std::int64_t>(x.value)); }

StragglerPolicy no_stragglers() {
  StragglerPolicy p;
  p.enabled = false;
  return p;
}

}  // namespace

TEST(OrderingBuffer, HoldsWithoutCoverage) {
  OrderingBuffer ob(3, no_stragglers());
  ob.on_trade(trade(0, 0, dc(5, 10)), TimePoint::us(1));
  EXPECT_TRUE(ob.release_ready(TimePoint::us(1)).empty());
  EXPECT_EQ(ob.pending(), 1u);
}

TEST(OrderingBuffer, TagRegressionIsProtocolError) {
  OrderingBuffer ob(2, no_stragglers());
  ob.on_trade(trade(0, 0, dc(5, 10)), TimePoint::us(1));
  EXPECT_THROW(ob.on_trade(trade(0, 1, dc(5, 8)), TimePoint::us(2)), ProtocolError);
}

TEST(OrderingBuffer, TradeRaisesKnownClock) {
  OrderingBuffer ob(2, no_stragglers());
  EXPECT_FALSE(ob.known_dc(ParticipantId(1)).has_value());
  ob.on_trade(trade(1, 0, dc(3, 4)), TimePoint::us(1));
  EXPECT_EQ(ob.known_dc(ParticipantId(1)), dc(3, 4));
}

TEST(OrderingBuffer, ForwardsWhenAllOthersStrictlyAhead) {
  OrderingBuffer ob(3, no_stragglers());
  ob.on_trade(trade(0, 0, dc(5, 10)), TimePoint::us(1));
  ob.on_heartbeat(hb(1, dc(5, 11)), TimePoint::us(2), gen_40us);
  ob.on_heartbeat(hb(2, dc(6, 0)), TimePoint::us(2), gen_40us);
  const auto out = ob.release_ready(TimePoint::us(3));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].forwarded_at, TimePoint::us(3));
  EXPECT_EQ(out[0].rank, 0u);
}

TEST(OrderingBuffer, EqualCoverageIsNotEnough) {
  OrderingBuffer ob(2, no_stragglers());
  ob.on_trade(trade(0, 0, dc(5, 10)), TimePoint::us(1));
  ob.on_heartbeat(hb(1, dc(5, 10)), TimePoint::us(2), gen_40us);
  EXPECT_TRUE(ob.release_ready(TimePoint::us(2)).empty());
  ob.on_heartbeat(hb(1, dc(5, 10) /* same */), TimePoint::us(3), gen_40us);
  EXPECT_TRUE(ob.release_ready(TimePoint::us(3)).empty());
  ob.on_heartbeat(hb(1, {PointId(5), Duration::us(10) + Duration::ns(1)}), TimePoint::us(4), gen_40us);
  EXPECT_EQ(ob.release_ready(TimePoint::us(4)).size(), 1u);
}

TEST(OrderingBuffer, TiesBreakByOwnerThenSeq) {
  OrderingBuffer ob(3, no_stragglers());
  ob.on_trade(trade(2, 0, dc(5, 10)), TimePoint::us(1));
  ob.on_trade(trade(1, 0, dc(5, 10)), TimePoint::us(1));
  ob.on_trade(trade(1, 1, dc(5, 10)), TimePoint::us(1));
  for (std::uint64_t j = 0; j < 3; ++j) ob.on_heartbeat(hb(j, dc(9, 0)), TimePoint::us(2), gen_40us);
  const auto out = ob.release_ready(TimePoint::us(2));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].trade.owner, ParticipantId(1));
  EXPECT_EQ(out[0].trade.seq, TradeSeq(0));
  EXPECT_EQ(out[1].trade.seq, TradeSeq(1));
  EXPECT_EQ(out[2].trade.owner, ParticipantId(2));
}

TEST(OrderingBuffer, RttEstimateFromHeartbeat) {
  OrderingBuffer ob(2, StragglerPolicy{});
  // G(8) = 320 us; heartbeat <8, 5us> received at 450 us: 450 - 320 - 5 = 125 us.
  ob.on_heartbeat(hb(1, dc(8, 5)), TimePoint::us(450), gen_40us);
  EXPECT_EQ(ob.rtt_estimate(ParticipantId(1)), Duration::us(450 - 320 - 5));
  EXPECT_EQ(ob.rtt_estimate(ParticipantId(1)), Duration::us(125));
  EXPECT_FALSE(ob.is_straggler(ParticipantId(1)));
}

TEST(OrderingBuffer, StragglerAboveThresholdAndReadmission) {
  OrderingBuffer ob(2, StragglerPolicy{});
  ob.on_heartbeat(hb(1, dc(0, 0)), TimePoint::us(251), gen_40us);
  EXPECT_TRUE(ob.is_straggler(ParticipantId(1)));
  // 0.8 * 250 = 200 us: 210 keeps it excluded, 199 re-admits.
  ob.on_heartbeat(hb(1, dc(1, 0)), TimePoint::us(40 + 210), gen_40us);
  EXPECT_TRUE(ob.is_straggler(ParticipantId(1)));
  ob.on_heartbeat(hb(1, dc(2, 0)), TimePoint::us(80 + 199), gen_40us);
  EXPECT_FALSE(ob.is_straggler(ParticipantId(1)));
  ASSERT_EQ(ob.transitions().size(), 2u);
  EXPECT_TRUE(ob.transitions()[0].excluded);
  EXPECT_FALSE(ob.transitions()[1].excluded);
}

TEST(OrderingBuffer, SilenceMarksStraggler) {
  OrderingBuffer ob(2, StragglerPolicy{});
  ob.on_heartbeat(hb(0, dc(0, 0)), TimePoint::us(100), gen_40us);
  ob.check_silence(TimePoint::us(250));
  EXPECT_FALSE(ob.is_straggler(ParticipantId(1)));
  ob.check_silence(TimePoint::us(251));
  EXPECT_TRUE(ob.is_straggler(ParticipantId(1)));
  EXPECT_FALSE(ob.is_straggler(ParticipantId(0)));
}

TEST(OrderingBuffer, StragglerLeavesWaitSet) {
  OrderingBuffer ob(3, StragglerPolicy{});
  ob.on_trade(trade(0, 0, dc(5, 10)), TimePoint::us(300));
  ob.on_heartbeat(hb(1, dc(6, 0)), TimePoint::us(300), [](PointId) { return TimePoint::us(250); });
  EXPECT_TRUE(ob.release_ready(TimePoint::us(300)).empty());
  ob.check_silence(TimePoint::us(300));  // participant 2 silent since start
  EXPECT_TRUE(ob.is_straggler(ParticipantId(2)));
  EXPECT_EQ(ob.release_ready(TimePoint::us(300)).size(), 1u);
}

TEST(OrderingBuffer, FlushEmptiesInKeyOrder) {
  OrderingBuffer ob(2, no_stragglers());
  ob.on_trade(trade(1, 0, dc(7, 1)), TimePoint::us(1));
  ob.on_trade(trade(0, 0, dc(6, 1)), TimePoint::us(1));
  const auto out = ob.flush(TimePoint::us(9));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].trade.owner, ParticipantId(0));
  EXPECT_EQ(ob.pending(), 0u);
}

TEST(OrderingBuffer, RandomScheduleForwardsInKeyOrderWithAndWithoutPiggyback) {
  // Several participants emit trades and heartbeats with monotone clocks;
  // messages from each participant arrive in order, interleaved randomly.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 4;
    struct Msg {
      bool is_trade;
      TradeView t;
      Heartbeat h;
    };
    std::vector<std::vector<Msg>> streams(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t point = 0;
      std::int64_t elapsed = 0;
      std::uint64_t seq = 0;
      for (int k = 0; k < 60; ++k) {
        if (std::bernoulli_distribution(0.2)(rng)) {
          point += 1;
          elapsed = 0;
        }
        elapsed += std::uniform_int_distribution<std::int64_t>(0, 3)(rng);
        const DeliveryClock c = dc(point, elapsed);
        if (std::bernoulli_distribution(0.5)(rng))
          streams[j].push_back({true, trade(j, seq++, c), {}});
        else
          streams[j].push_back({false, {}, hb(j, c)});
      }
      streams[j].push_back({false, {}, hb(j, dc(1'000, 0))});  // final coverage
    }
    auto play = [&](bool piggyback) {
      OrderingBuffer ob(n, no_stragglers(), TimePoint::origin(), piggyback);
      std::vector<std::size_t> cursor(n, 0);
      std::mt19937_64 order_rng(trial);
      std::vector<TradeView> forwarded;
      TimePoint now;
      while (true) {
        std::vector<std::size_t> live;
        for (std::size_t j = 0; j < n; ++j)
          if (cursor[j] < streams[j].size()) live.push_back(j);
        if (live.empty()) break;
        const std::size_t j = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(order_rng)];
        const Msg& m = streams[j][cursor[j]++];
        now += Duration::ns(1);
        if (m.is_trade)
          ob.on_trade(m.t, now);
        else
          ob.on_heartbeat(m.h, now, [](PointId) { return TimePoint::origin(); });
        for (const auto& f : ob.release_ready(now)) forwarded.push_back(f.trade);
      }
      EXPECT_EQ(ob.pending(), 0u);
      return forwarded;
    };
    const auto with = play(true);
    const auto without = play(false);
    EXPECT_TRUE(std::is_sorted(with.begin(), with.end(), OrderingKeyLess{}));
    ASSERT_EQ(with.size(), without.size());
    for (std::size_t k = 0; k < with.size(); ++k) {
      EXPECT_EQ(with[k].owner, without[k].owner);
      EXPECT_EQ(with[k].seq, without[k].seq);
    }
  }
}

TEST(GatewayRelease, Examples) {
  const DeliveryClock tag = dc(5, 3);
  const std::vector<std::optional<PointId>> lagging{PointId(4), PointId(5), PointId(6)};
  const std::vector<std::optional<PointId>> caught_up{PointId(5), PointId(5), PointId(7)};
  const std::vector<std::optional<PointId>> empty(3);
  EXPECT_FALSE(gateway_release_ready(tag, lagging));
  EXPECT_TRUE(gateway_release_ready(tag, caught_up));
  EXPECT_FALSE(gateway_release_ready(dc(0, 0), empty));
}

TEST(GatewayRelease, BuffersUntilEveryFloorCatchesUp) {
  Gateway g(2);
  g.submit({ParticipantId(0), 0, dc(5, 1), TimePoint::us(1)});
  g.submit({ParticipantId(1), 1, dc(3, 1), TimePoint::us(1)});
  g.report_floor(ParticipantId(0), PointId(6));
  EXPECT_TRUE(g.release(TimePoint::us(2)).empty());
  g.report_floor(ParticipantId(1), PointId(4));
  auto out = g.release(TimePoint::us(3));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].message.id, 1u);
  g.report_floor(ParticipantId(1), PointId(3));  // stale report is ignored
  g.report_floor(ParticipantId(1), PointId(5));
  out = g.release(TimePoint::us(4));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].message.id, 0u);
  EXPECT_EQ(g.buffered(), 0u);
}
