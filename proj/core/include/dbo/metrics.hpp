#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dbo/trade_log.hpp"

namespace dbo {

struct FairnessCount {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  /// 1.0 when there were no races.
  double ratio() const { return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

/// Pairwise race fairness. A race is a trigger point with a forwarded trade
/// from each of two participants (their first trade on that trigger); it is
/// correct iff the smaller response time has the smaller forward rank.
/// Equal response times are left out.
FairnessCount fairness(const TradeLog& log);

struct RtBucket {
  Duration lo;  ///< exclusive
  Duration hi;  ///< inclusive
  FairnessCount result;
};

/// Fairness restricted to races whose faster response time lies in (lo, hi].
std::vector<RtBucket> fairness_by_rt_bucket(const TradeLog& log, const std::vector<std::pair<Duration, Duration>>& buckets);

/// L = F - G - RT over forwarded, non-stalled trades.
struct LatencyStats {
  std::size_t count = 0;
  std::size_t unforwarded = 0;
  std::size_t stalled = 0;
  double avg_us = 0.0;
  Duration p50;
  Duration p99;
  Duration p999;
  Duration max;
  double oracle_avg_us = 0.0;
};

Duration trade_latency(const TradeRecord& t);
LatencyStats latency_stats(const TradeLog& log);

/// Nearest-rank percentile of an ascending sequence; p in (0, 1].
Duration nearest_rank(const std::vector<Duration>& sorted, double p);

enum class ViolationKind { C2, Causality, C3, ObSafety, Pacing, GapConsistency };

std::string_view violation_name(ViolationKind k);

struct TradeRef {
  ParticipantId owner;
  TradeSeq seq;
};

struct Violation {
  ViolationKind kind;
  std::vector<TradeRef> trades;
  std::vector<ParticipantId> participants;
  std::string detail;
};

struct ConformanceReport {
  std::vector<Violation> violations;
  std::uint64_t c2_pairs = 0;
  std::uint64_t c3_pairs = 0;
  /// Checks that need data the log does not carry.
  std::vector<std::string> skipped;

  std::size_t count(ViolationKind k) const;
  bool clean() const { return violations.empty(); }
};

ConformanceReport conformance_checks(const TradeLog& log);

void write_trades_csv(std::ostream& out, const TradeLog& log);

std::string summary_header();
std::string summary_row(const TradeLog& log);

/// Malformed per-trade CSV; `row()` is the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t row, const std::string& message);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Rebuilds an analysable log from a per-trade CSV. The resolved config
/// supplies the scheme, horizon and RB-MP bounds.
TradeLog read_trades_csv(std::istream& in, const RunConfig& config);

}  // namespace dbo
