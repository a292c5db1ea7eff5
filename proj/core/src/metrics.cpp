#include "dbo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace dbo {

namespace {

/// Trade indices grouped by trigger, each group ordered by (owner, seq).
std::vector<std::vector<std::size_t>> races(const TradeLog& log) {
  std::vector<std::size_t> idx(log.trades.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = log.trades[a];
    const auto& y = log.trades[b];
    return std::tie(x.trigger, x.owner, x.seq) < std::tie(y.trigger, y.owner, y.seq);
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k == 0 || log.trades[idx[k]].trigger != log.trades[idx[k - 1]].trigger) out.emplace_back();
    out.back().push_back(idx[k]);
  }
  return out;
}

/// First forwarded trade per owner within a race group.
std::vector<std::size_t> first_per_owner(const TradeLog& log, const std::vector<std::size_t>& group) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < group.size(); ++k) {
    const auto& t = log.trades[group[k]];
    if (k > 0 && log.trades[group[k - 1]].owner == t.owner) continue;
    if (t.forwarded()) out.push_back(group[k]);
  }
  return out;
}

template <class Fn>
void for_each_race_pair(const TradeLog& log, Fn&& fn) {
  for (const auto& group : races(log)) {
    const auto firsts = first_per_owner(log, group);
    for (std::size_t a = 0; a < firsts.size(); ++a)
      for (std::size_t b = a + 1; b < firsts.size(); ++b) {
        const auto& x = log.trades[firsts[a]];
        const auto& y = log.trades[firsts[b]];
        if (x.rt == y.rt) continue;
        const auto& fast = x.rt < y.rt ? x : y;
        const auto& slow = x.rt < y.rt ? y : x;
        fn(fast, slow);
      }
  }
}

TradeRef ref(const TradeRecord& t) { return {t.owner, t.seq}; }

}  // namespace

FairnessCount fairness(const TradeLog& log) {
  FairnessCount c;
  for_each_race_pair(log, [&](const TradeRecord& fast, const TradeRecord& slow) {
    ++c.total;
    if (*fast.rank < *slow.rank) ++c.correct;
  });
  return c;
}

std::vector<RtBucket> fairness_by_rt_bucket(const TradeLog& log,
                                            const std::vector<std::pair<Duration, Duration>>& buckets) {
  std::vector<RtBucket> out;
  for (const auto& [lo, hi] : buckets) out.push_back({lo, hi, {}});
  for_each_race_pair(log, [&](const TradeRecord& fast, const TradeRecord& slow) {
    for (auto& b : out) {
      if (fast.rt > b.lo && fast.rt <= b.hi) {
        ++b.result.total;
        if (*fast.rank < *slow.rank) ++b.result.correct;
      }
    }
  });
  return out;
}

Duration trade_latency(const TradeRecord& t) { return (*t.f - t.g) - t.rt; }

Duration nearest_rank(const std::vector<Duration>& sorted, double p) {
  if (sorted.empty()) return Duration::zero();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencyStats latency_stats(const TradeLog& log) {
  LatencyStats s;
  std::vector<Duration> ls;
  double sum = 0.0;
  double oracle_sum = 0.0;
  for (const auto& t : log.trades) {
    if (!t.forwarded()) {
      ++s.unforwarded;
      continue;
    }
    if (t.stalled) {
      ++s.stalled;
      continue;
    }
    ls.push_back(trade_latency(t));
    sum += ls.back().to_us();
    oracle_sum += t.oracle.to_us();
  }
  std::sort(ls.begin(), ls.end());
  s.count = ls.size();
  if (ls.empty()) return s;
  s.avg_us = sum / static_cast<double>(ls.size());
  s.oracle_avg_us = oracle_sum / static_cast<double>(ls.size());
  s.p50 = nearest_rank(ls, 0.5);
  s.p99 = nearest_rank(ls, 0.99);
  s.p999 = nearest_rank(ls, 0.999);
  s.max = ls.back();
  return s;
}

std::string_view violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::C2:
      return "c2";
    case ViolationKind::Causality:
      return "causality";
    case ViolationKind::C3:
      return "c3";
    case ViolationKind::ObSafety:
      return "ob_safety";
    case ViolationKind::Pacing:
      return "pacing";
    case ViolationKind::GapConsistency:
      return "gap_consistency";
  }
  return "unknown";
}

std::size_t ConformanceReport::count(ViolationKind k) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; }));
}

ConformanceReport conformance_checks(const TradeLog& log) {
  ConformanceReport r;

  for_each_race_pair(log, [&](const TradeRecord& fast, const TradeRecord& slow) {
    if (fast.rt < log.horizon) {
      ++r.c2_pairs;
      if (*fast.rank > *slow.rank)
        r.violations.push_back({ViolationKind::C2, {ref(fast), ref(slow)}, {fast.owner, slow.owner},
                                fmt::format("trigger {}: rt {} ns ranked after rt {} ns", fast.trigger.value,
                                            fast.rt.count(), slow.rt.count())});
    }
    if (log.rbmp) {
      const Duration spread = log.rbmp->high - log.rbmp->low;
      if (fast.rt < slow.rt - spread && fast.rt < log.horizon - log.rbmp->high) {
        ++r.c3_pairs;
        if (*fast.rank > *slow.rank)
          r.violations.push_back({ViolationKind::C3, {ref(fast), ref(slow)}, {fast.owner, slow.owner},
                                  fmt::format("trigger {}: rt {} ns ranked after rt {} ns", fast.trigger.value,
                                              fast.rt.count(), slow.rt.count())});
      }
    }
  });

  // Causality: a participant's trades leave in submission order.
  for (std::size_t k = 1; k < log.trades.size(); ++k) {
    const auto& prev = log.trades[k - 1];
    const auto& cur = log.trades[k];
    if (prev.owner != cur.owner || !prev.forwarded() || !cur.forwarded()) continue;
    if (*prev.rank > *cur.rank)
      r.violations.push_back({ViolationKind::Causality, {ref(prev), ref(cur)}, {cur.owner},
                              fmt::format("seq {} forwarded after seq {}", prev.seq.value, cur.seq.value)});
  }

  if (log.uses_dc) {
    // Scan in forward order from the back, keeping the smallest later tag
    // and the smallest later tag from a different owner than that one.
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < log.trades.size(); ++k)
      if (log.trades[k].forwarded() && log.trades[k].dc_tag) order.push_back(k);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return *log.trades[a].rank < *log.trades[b].rank; });
    std::optional<std::size_t> best, other;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto& t = log.trades[*it];
      std::optional<std::size_t> cand = best;
      if (cand && log.trades[*cand].owner == t.owner) cand = other;
      if (cand && *log.trades[*cand].dc_tag < *t.dc_tag) {
        const auto& later = log.trades[*cand];
        r.violations.push_back({ViolationKind::ObSafety, {ref(t), ref(later)}, {t.owner, later.owner},
                                fmt::format("rank {} forwarded ahead of a smaller tag at rank {}", *t.rank, *later.rank)});
      }
      auto tag_of = [&](std::size_t k) { return *log.trades[k].dc_tag; };
      if (!best || tag_of(*it) < tag_of(*best)) {
        if (best && log.trades[*best].owner != t.owner) other = best;
        best = *it;
      } else if (log.trades[*best].owner != t.owner && (!other || tag_of(*it) < tag_of(*other))) {
        other = *it;
      }
    }
  }

  const bool have_points = !log.point_delivery.empty();
  if (log.paced) {
    if (!have_points) {
      r.skipped.emplace_back("pacing");
    } else {
      for (std::size_t i = 0; i < log.point_delivery.size(); ++i) {
        std::optional<TimePoint> prev;
        for (const auto& d : log.point_delivery[i]) {
          if (!d) continue;
          if (prev && *d != *prev && *d - *prev < log.horizon)
            r.violations.push_back({ViolationKind::Pacing, {}, {ParticipantId(i)},
                                    fmt::format("deliveries at {} and {} ns", prev->count(), d->count())});
          if (!prev || *d > *prev) prev = d;
        }
      }
    }
  }

  if (log.uses_dc) {
    if (!have_points) {
      r.skipped.emplace_back("gap_consistency");
    } else {
      const std::size_t n = log.point_delivery.size();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& di = log.point_delivery[i];
        std::optional<std::size_t> prev;
        for (std::size_t y = 0; y < di.size(); ++y) {
          if (!di[y]) continue;
          if (prev) {
            const std::size_t x = *prev;
            const Duration gap = *di[y] - *di[x];
            if (gap < log.horizon) {
              for (std::size_t j = 0; j < n; ++j) {
                const auto& dj = log.point_delivery[j];
                if (j == i || !dj[x] || !dj[y]) continue;
                if (*dj[y] - *dj[x] != gap)
                  r.violations.push_back(
                      {ViolationKind::GapConsistency, {}, {ParticipantId(i), ParticipantId(j)},
                       fmt::format("points {},{}: gap {} ns at {} but {} ns at {}", x, y, gap.count(), i,
                                   (*dj[y] - *dj[x]).count(), j)});
              }
            }
          }
          prev = y;
        }
      }
    }
  }
  return r;
}

void write_trades_csv(std::ostream& out, const TradeLog& log) {
  out << "owner,seq,trigger,rt_ns,g_ns,d_ns,s_ns,dc_point,dc_elapsed_ns,f_ns,rank,oracle_ns\n";
  std::string line;
  for (const auto& t : log.trades) {
    line.clear();
    auto it = std::back_inserter(line);
    fmt::format_to(it, "{},{},{},{},{},{},{},", t.owner.value, t.seq.value, t.trigger.value, t.rt.count(), t.g.count(),
                   t.d.count(), t.s.count());
    if (t.dc_tag) {
      if (t.dc_tag->last_point)
        fmt::format_to(it, "{},", t.dc_tag->last_point->value);
      else
        fmt::format_to(it, "-1,");
      fmt::format_to(it, "{},", t.dc_tag->elapsed.count());
    } else {
      fmt::format_to(it, ",,");
    }
    if (t.forwarded())
      fmt::format_to(it, "{},{},", t.f->count(), *t.rank);
    else
      fmt::format_to(it, ",,");
    fmt::format_to(it, "{}\n", t.oracle.count());
    out << line;
  }
}

std::string summary_header() { return "scheme,fairness_pct,avg_us,p50_us,p99_us,p999_us,max_us,dropped,stalled"; }

std::string summary_row(const TradeLog& log) {
  const auto f = fairness(log);
  const auto s = latency_stats(log);
  return fmt::format("{},{:.3f},{:.3f},{},{},{},{},{},{}", log.scheme, 100.0 * f.ratio(), s.avg_us,
                     format_us(s.p50.count()), format_us(s.p99.count()), format_us(s.p999.count()),
                     format_us(s.max.count()), s.unforwarded, s.stalled);
}

CsvError::CsvError(std::size_t row, const std::string& message)
    : std::runtime_error(fmt::format("row {}: {}", row, message)), row_(row) {}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view s, std::size_t row, std::string_view column) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw CsvError(row, fmt::format("bad {} value '{}'", column, s));
  return v;
}

}  // namespace

TradeLog read_trades_csv(std::istream& in, const RunConfig& config) {
  static constexpr std::string_view header = "owner,seq,trigger,rt_ns,g_ns,d_ns,s_ns,dc_point,dc_elapsed_ns,f_ns,rank,oracle_ns";
  TradeLog log;
  log.scheme = std::string(scheme_name(config.scheme));
  log.seed = config.seed;
  log.config = echo_config(config);
  log.participants = config.num_mps;
  log.horizon = config.horizon;
  log.uses_dc = uses_delivery_clock(config.scheme);
  log.paced = std::holds_alternative<DboScheme>(config.scheme);
  log.rbmp = config.rbmp;

  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw CsvError(row, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw CsvError(row, "unexpected header");
  std::uint64_t max_point = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) throw CsvError(row, fmt::format("expected 12 fields, got {}", f.size()));
    auto nonneg = [&](std::size_t k, std::string_view col) {
      const auto v = parse_int(f[k], row, col);
      if (v < 0) throw CsvError(row, fmt::format("negative {}", col));
      return v;
    };
    TradeRecord t;
    t.owner = ParticipantId(nonneg(0, "owner"));
    t.seq = TradeSeq(nonneg(1, "seq"));
    t.trigger = PointId(nonneg(2, "trigger"));
    t.rt = Duration(nonneg(3, "rt_ns"));
    t.g = TimePoint(nonneg(4, "g_ns"));
    t.d = TimePoint(nonneg(5, "d_ns"));
    t.s = TimePoint(nonneg(6, "s_ns"));
    t.stamped_at = t.s;
    if (f[7].empty() != f[8].empty()) throw CsvError(row, "dc_point and dc_elapsed_ns must both be set or empty");
    if (!f[7].empty()) {
      const auto p = parse_int(f[7], row, "dc_point");
      if (p < -1) throw CsvError(row, "dc_point below sentinel");
      t.dc_tag = DeliveryClock{p < 0 ? std::nullopt : std::optional<PointId>(PointId(p)), Duration(nonneg(8, "dc_elapsed_ns"))};
    }
    if (f[9].empty() != f[10].empty()) throw CsvError(row, "f_ns and rank must both be set or empty");
    if (!f[9].empty()) {
      t.f = TimePoint(nonneg(9, "f_ns"));
      t.rank = static_cast<std::uint64_t>(nonneg(10, "rank"));
    } else {
      t.dropped = true;
    }
    t.oracle = Duration(nonneg(11, "oracle_ns"));
    if (!log.trades.empty()) {
      const auto& prev = log.trades.back();
      if (std::tie(prev.owner, prev.seq) >= std::tie(t.owner, t.seq))
        throw CsvError(row, "rows must be sorted by (owner, seq)");
    }
    if (t.owner.value >= log.participants) log.participants = t.owner.value + 1;
    max_point = std::max(max_point, t.trigger.value);
    log.trades.push_back(t);
  }

  if (!log.trades.empty()) {
    log.generated.assign(max_point + 1, TimePoint::origin());
    for (const auto& t : log.trades) log.generated[t.trigger.value] = t.g;
  }
  // Hand-off times equal in-band delivery times only when nothing was
  // retransmitted and participants are colocated with their buffers.
  if (config.drop_md_prob == 0.0 && !config.blackhole && !config.rbmp && !log.trades.empty()) {
    log.point_delivery.assign(log.participants, std::vector<std::optional<TimePoint>>(max_point + 1));
    for (const auto& t : log.trades) log.point_delivery[t.owner.value][t.trigger.value] = t.d;
  }
  return log;
}

}  // namespace dbo
