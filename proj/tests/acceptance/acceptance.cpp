// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dbo/counterexample.hpp"
#include "dbo/engine.hpp"
#include "dbo/metrics.hpp"

using namespace dbo;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  fmt::print("{} criterion {}: {}\n", ok ? "PASS" : "FAIL", n, detail);
  std::fflush(stdout);
  failures += !ok;
}

RunConfig preset(const std::string& name, std::uint64_t seed) {
  auto c = resolve_config({{"preset", name}});
  c.seed = seed;
  return c;
}

RunConfig with_scheme(RunConfig c, SchemeKind s) {
  c.scheme = s;
  return c;
}

std::string csv_of(const TradeLog& log) {
  std::ostringstream out;
  write_trades_csv(out, log);
  return out.str();
}

const TradeRecord* find_trade(const TradeLog& log, TradeRef r) {
  auto it = std::lower_bound(log.trades.begin(), log.trades.end(), r, [](const TradeRecord& t, const TradeRef& k) {
    return std::tie(t.owner, t.seq) < std::tie(k.owner, k.seq);
  });
  return it != log.trades.end() && it->owner == r.owner && it->seq == r.seq ? &*it : nullptr;
}

/// Criteria 1 and 2: perfect fairness and the latency lower bound.
void fairness_and_lower_bound() {
  constexpr int kSeeds = 20;
  std::uint64_t trades = 0, races = 0, incorrect = 0, below_oracle = 0, checked = 0, c2 = 0;
  double slowest_s = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto log = run(preset("paper-sim", seed));
    slowest_s = std::max(slowest_s, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const auto f = fairness(log);
    trades += log.trades.size();
    races += f.total;
    incorrect += f.total - f.correct;
    c2 += conformance_checks(log).count(ViolationKind::C2);
    for (const auto& t : log.trades) {
      if (!t.forwarded()) continue;
      ++checked;
      below_oracle += trade_latency(t) < t.oracle;
    }
  }
  report(1, incorrect == 0 && c2 == 0 && trades >= 100'000 && slowest_s <= 60.0,
         fmt::format("paper-sim dbo over {} seeds: fairness {:.3f}% ({} races, {} misordered, {} c2), {} trades, "
                     "slowest seed {:.2f}s",
                     kSeeds, 100.0 * static_cast<double>(races - incorrect) / static_cast<double>(races), races,
                     incorrect, c2, trades, slowest_s));
  report(2, below_oracle == 0 && checked > 0,
         fmt::format("{} of {} forwarded trades below the max-RTT oracle", below_oracle, checked));
}

/// Criterion 3: on constant links DBO adds at most (1+kappa)delta + tau.
void upper_bound() {
  std::uint64_t checked = 0, over = 0;
  Duration worst_gap = Duration::zero();
  for (int seed = 1; seed <= 10; ++seed) {
    const auto c = preset("constant-net", seed);
    const auto& d = std::get<DboScheme>(c.scheme);
    const Duration bound = Duration::from_us((1.0 + d.kappa) * d.delta.to_us()) + d.tau;
    const auto log = run(c);
    for (const auto& t : log.trades) {
      if (!t.forwarded()) continue;
      ++checked;
      const Duration gap = trade_latency(t) - t.oracle;
      worst_gap = std::max(worst_gap, gap);
      over += gap > bound;
    }
  }
  report(3, over == 0 && checked > 0,
         fmt::format("constant-net 10 seeds: {} of {} trades exceed oracle + 45us (worst excess over oracle {}us)",
                     over, checked, format_us(worst_gap.count())));
}

/// CloudEx latency predicted from the link traces alone: data released at
/// max(arrival, G + th), trade forwarded at max(arrival, S + th).
double cloudex_expected_avg_us(const RunConfig& c, const TradeLog& log, Duration th) {
  const TimePoint horizon = TimePoint::origin() + c.duration + c.drain + Duration::ms(1);
  std::vector<LatencyTrace> md, up;
  for (std::uint32_t j = 0; j < c.num_mps; ++j) {
    const LinkId m{LinkKind::MarketData, ParticipantId(j)}, u{LinkKind::Uplink, ParticipantId(j)};
    md.push_back(build_trace(c.model_for(m), m, c.seed, horizon));
    up.push_back(build_trace(c.model_for(u), u, c.seed, horizon));
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : log.trades) {
    if (!t.forwarded()) continue;
    const auto j = t.owner.value;
    const TimePoint d = std::max(md[j].fifo_arrival(t.g), t.g + th);
    const TimePoint s = d + t.rt;
    const TimePoint f = std::max(up[j].fifo_arrival(s), s + th);
    sum += ((f - t.g) - t.rt).to_us();
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

/// Criterion 4: Direct and CloudEx fall short of DBO under spikes.
void baseline_separation() {
  bool ok = true;
  std::string detail;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto c = preset("paper-sim", seed);
    const Duration th = Duration::us(150);
    const double dbo = fairness(run(c)).ratio();
    const double direct = fairness(run(with_scheme(c, DirectScheme{}))).ratio();
    const auto cx_log = run(with_scheme(c, CloudExScheme{th, th}));
    const double cloudex = fairness(cx_log).ratio();
    const bool spiked = !cx_log.late_deliveries.empty();
    const double avg = latency_stats(cx_log).avg_us;
    const double expected = cloudex_expected_avg_us(c, cx_log, th);
    const bool seed_ok = dbo == 1.0 && direct < 0.95 && (!spiked || cloudex < 1.0) &&
                         std::abs(avg - expected) <= 0.1 * expected;
    ok = ok && seed_ok;
    detail += fmt::format("{}seed {}: dbo {:.3f}% direct {:.3f}% cloudex {:.3f}% ({} late deliveries), cloudex avg "
                          "{:.2f}us vs 300 + excess {:.2f}us",
                          seed > 1 ? "; " : "", seed, 100 * dbo, 100 * direct, 100 * cloudex,
                          cx_log.late_deliveries.size(), avg, expected - 300.0);
  }
  report(4, ok, detail);
}

/// Criterion 5: responses slower than the horizon stay almost always fair
/// on a low-jitter trace.
void slow_trades() {
  const std::vector<std::pair<Duration, Duration>> buckets{{Duration::us(20), Duration::us(25)},
                                                           {Duration::us(25), Duration::us(30)},
                                                           {Duration::us(30), Duration::us(35)},
                                                           {Duration::us(35), Duration::us(40)}};
  std::vector<FairnessCount> total(buckets.size());
  for (int seed = 1; seed <= 3; ++seed) {
    const auto got = fairness_by_rt_bucket(run(preset("slow-trades", seed)), buckets);
    for (std::size_t k = 0; k < got.size(); ++k) {
      total[k].correct += got[k].result.correct;
      total[k].total += got[k].result.total;
    }
  }
  const double need[] = {0.99, 0.99, 0.99, 0.95};
  bool ok = true;
  std::string detail = "slow-trades 3 seeds:";
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    ok = ok && total[k].total > 0 && total[k].ratio() >= need[k];
    detail += fmt::format(" ({},{}]us {:.4f} of {}", format_us(buckets[k].first.count()),
                          format_us(buckets[k].second.count()), total[k].ratio(), total[k].total);
  }
  report(5, ok, detail);
}

Duration p99_after(const TradeLog& log, TimePoint from, ParticipantId skip) {
  std::vector<Duration> ls;
  for (const auto& t : log.trades)
    if (t.forwarded() && t.owner != skip && t.s >= from) ls.push_back(trade_latency(t));
  std::sort(ls.begin(), ls.end());
  return nearest_rank(ls, 0.99);
}

/// Criterion 6: a blackholed buffer is excluded and only it loses fairness.
void straggler() {
  const auto c = preset("straggler", 1);
  auto calm = c;
  calm.blackhole.reset();
  const auto log = run(c);
  const auto base = run(calm);
  const ParticipantId who = c.blackhole->who;
  std::optional<TimePoint> excluded_at;
  for (const auto& tr : log.transitions)
    if (tr.excluded && tr.who == who) {
      excluded_at = tr.at;
      break;
    }
  if (!excluded_at) {
    report(6, false, "straggler never excluded");
    return;
  }
  const Duration p99 = p99_after(log, *excluded_at, who);
  const Duration p99_base = p99_after(base, *excluded_at, who);
  const auto r = conformance_checks(log);
  std::size_t foreign = 0;
  for (const auto& v : r.violations)
    if (std::find(v.participants.begin(), v.participants.end(), who) == v.participants.end()) ++foreign;
  const auto f = fairness(log);
  report(6, foreign == 0 && p99 <= p99_base * 2,
         fmt::format("excluded at {}us; others' p99 {}us vs {}us without blackhole; {} violations, {} not involving "
                     "participant {}; fairness {:.3f}%",
                     format_us(excluded_at->count()), format_us(p99.count()), format_us(p99_base.count()),
                     r.violations.size(), foreign, who.value, 100 * f.ratio()));
}

/// Criterion 7: condition C3 holds with bounded RB-MP latency.
void rbmp_bounds() {
  std::uint64_t trades = 0, pairs = 0, bad = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto log = run(preset("rbmp-bounds", seed));
    const auto r = conformance_checks(log);
    trades += log.trades.size();
    pairs += r.c3_pairs;
    bad += r.count(ViolationKind::C3);
  }
  report(7, bad == 0 && trades >= 50'000 && pairs > 0,
         fmt::format("rbmp-bounds 3 seeds: {} trades, {} qualifying pairs, {} c3 violations", trades, pairs, bad));
}

/// Criterion 8: every valid tuple gives indistinguishable, conflicting cases.
void counterexamples() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> pick(1, 100'000);
  int built = 0, good = 0;
  while (built < 1000) {
    const Duration c1(pick(rng)), c2(pick(rng)), c3(pick(rng)), c4(pick(rng));
    if (!(c1 < c2 && c3 > c4 && c1 + c3 < c2 + c4)) continue;
    const auto ce = build_lemma1_counterexample(c1, c2, c3, c4);
    ++built;
    good += observably_identical(ce.case1, ce.case2) && ce.case1.required != ce.case2.required &&
            fair_order(ce.case1) == ce.case1.required && fair_order(ce.case2) == ce.case2.required;
  }
  report(8, good == built, fmt::format("{} of {} random tuples conflict", good, built));
}

/// Criterion 9: identical config and seed give identical bytes.
void determinism() {
  bool ok = true;
  std::string detail;
  for (const std::string name : {"paper-sim", "straggler", "rbmp-bounds"}) {
    auto c = preset(name, 17);
    c.duration = std::min(c.duration, Duration::ms(400));
    c.drop_md_prob = 1e-3;
    c.drop_hb_prob = 1e-3;
    for (const SchemeKind s : {c.scheme, SchemeKind{DirectScheme{}}, SchemeKind{CloudExScheme{Duration::us(150), Duration::us(150)}}}) {
      const auto cfg = with_scheme(c, s);
      const bool same = csv_of(run(cfg)) == csv_of(run(cfg));
      ok = ok && same;
      if (!same) detail += fmt::format(" {}/{} differs", name, scheme_name(s));
    }
  }
  report(9, ok, "repeated runs byte-identical across presets and schemes" + detail);
}

/// Criterion 10: loss only affects races on retransmitted or dropped trades.
void loss() {
  std::uint64_t c2 = 0, attributed = 0, clean_races = 0, clean_correct = 0, flagged = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    auto c = preset("paper-sim", seed);
    c.drop_md_prob = 1e-3;
    c.market_data_model.drop_prob = 1e-3;
    const auto log = run(c);
    for (const auto& t : log.trades) flagged += t.retransmitted_trigger || t.dropped;
    for (const auto& v : conformance_checks(log).violations) {
      if (v.kind != ViolationKind::C2) continue;
      ++c2;
      bool any = false;
      for (const auto& ref : v.trades) {
        const auto* t = find_trade(log, ref);
        any = any || (t && (t->retransmitted_trigger || t->dropped));
      }
      attributed += any;
    }
    // Fairness over races between unaffected trades only.
    TradeLog unaffected = log;
    std::erase_if(unaffected.trades, [](const TradeRecord& t) { return t.retransmitted_trigger || t.dropped; });
    const auto f = fairness(unaffected);
    clean_races += f.total;
    clean_correct += f.correct;
  }
  report(10, attributed == c2 && clean_correct == clean_races && flagged > 0,
         fmt::format("drop 1e-3 over 3 seeds: {} flagged trades, {} c2 violations, {} on flagged trades; other races "
                     "{} of {} fair",
                     flagged, c2, attributed, clean_correct, clean_races));
}

}  // namespace

int main() {
  fairness_and_lower_bound();
  upper_bound();
  baseline_separation();
  slow_trades();
  straggler();
  rbmp_bounds();
  counterexamples();
  determinism();
  loss();
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
