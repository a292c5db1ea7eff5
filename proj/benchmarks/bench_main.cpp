#include <benchmark/benchmark.h>

#include <random>

#include "dbo/config.hpp"
#include "dbo/engine.hpp"
#include "dbo/ordering_buffer.hpp"

using namespace dbo;

namespace {

void BM_EngineRun(benchmark::State& state) {
  auto c = resolve_config({{"preset", "paper-sim"}});
  c.duration = Duration::ms(state.range(0));
  std::size_t trades = 0;
  for (auto _ : state) {
    const auto log = run(c);
    trades += log.trades.size();
    benchmark::DoNotOptimize(log.trades.data());
  }
  state.counters["trades/s"] = benchmark::Counter(static_cast<double>(trades), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EngineRun)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EngineRunScheme(benchmark::State& state) {
  const char* names[] = {"dbo", "direct", "direct_dc", "cloudex"};
  auto c = resolve_config({{"preset", "paper-sim"}, {"scheme", names[state.range(0)]}, {"duration_ms", "50"}});
  state.SetLabel(names[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(run(c).trades.size());
}
BENCHMARK(BM_EngineRunScheme)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

// Trades from n participants tagged against one point, then released by
// a round of heartbeats.
void BM_OrderingBufferRelease(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> rt(5'000, 20'000);
  std::uint64_t point = 0;
  OrderingBuffer ob(n, StragglerPolicy{false}, TimePoint::origin());
  std::vector<std::uint64_t> seq(n, 0);
  TimePoint now = TimePoint::origin();
  auto gen = [](PointId) { return TimePoint::origin(); };
  for (auto _ : state) {
    ++point;
    now += Duration::us(40);
    for (std::size_t j = 0; j < n; ++j) {
      const DeliveryClock tag{PointId(point), Duration(rt(rng))};
      ob.on_trade(TradeView{ParticipantId(j), TradeSeq(seq[j]++), tag, now}, now);
    }
    for (std::size_t j = 0; j < n; ++j)
      ob.on_heartbeat(Heartbeat{ParticipantId(j), DeliveryClock{PointId(point), Duration::us(25)}, now}, now, gen);
    benchmark::DoNotOptimize(ob.release_ready(now).size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_OrderingBufferRelease)->Arg(10)->Arg(50)->Arg(200);

void BM_DcCompare(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<DeliveryClock> clocks(1024);
  for (auto& c : clocks) c = {PointId(rng() % 64), Duration(static_cast<std::int64_t>(rng() % 20'000))};
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dc_compare(clocks[k & 1023], clocks[(k + 1) & 1023]));
    ++k;
  }
}
BENCHMARK(BM_DcCompare);

}  // namespace
BENCHMARK_MAIN();
