#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinkKind {
  MarketData,  ///< CES -> RB_i
  Uplink,      ///< RB_i -> OB (trades and heartbeats share it)
};

struct LinkId {
  LinkKind kind;
  ParticipantId participant;
};

struct ConstantLatency {
  Duration latency;
};

/// Per-participant static offset plus jitter resampled every `segment`.
struct StaticOffsetJitter {
  Duration base;
  Duration skew_per_participant;
  Duration jitter;  ///< half-width of the uniform jitter
  Duration segment = Duration::us(10);
};

/// Bounded random walk at the floor with Poisson spikes that decay
/// exponentially back toward the walk.
struct RandomWalkSpikes {
  Duration floor = Duration::us(50);
  Duration cap = Duration::us(400);
  Duration walk = Duration::us(20);
  Duration segment = Duration::us(10);
  double spike_rate_hz = 50.0;
  Duration spike_decay = Duration::us(50);
};

struct FileReplay {
  std::filesystem::path path;
};

using LatencyKind = std::variant<ConstantLatency, StaticOffsetJitter, RandomWalkSpikes, FileReplay>;

struct LatencyModel {
  LatencyKind kind = ConstantLatency{Duration::us(50)};
  double drop_prob = 0.0;
};

/// Round-trip latency bounds between a release buffer and its participant.
struct RbMpBounds {
  Duration low;
  Duration high;

  RbMpBounds(Duration lo, Duration hi);
};

struct TraceSegment {
  TimePoint start;
  Duration latency;
};

/// Piecewise-constant one-way latency as a function of send time.
///
/// Besides the raw value, the trace exposes the in-order arrival envelope:
/// a message sent at t can never arrive before a message sent earlier on
/// the same link, so its arrival is max(t + raw(t), latest earlier arrival).
class LatencyTrace {
 public:
  /// `valid_until`, when set, bounds the queryable send times (inclusive);
  /// queries past it raise TraceError with the segment position.
  explicit LatencyTrace(std::vector<TraceSegment> segments, std::optional<TimePoint> valid_until = std::nullopt);

  Duration raw_at(TimePoint send) const;
  TimePoint fifo_arrival(TimePoint send) const;
  Duration fifo_latency(TimePoint send) const { return fifo_arrival(send) - send; }

  const std::vector<TraceSegment>& segments() const { return segments_; }
  std::optional<TimePoint> valid_until() const { return valid_until_; }

 private:
  std::size_t locate(TimePoint send) const;

  std::vector<TraceSegment> segments_;
  // envelope_[k]: latest arrival among sends strictly before segment k.
  std::vector<std::int64_t> envelope_;
  std::optional<TimePoint> valid_until_;
};

/// Materializes the trace one link follows over [0, horizon].
LatencyTrace build_trace(const LatencyModel& model, LinkId link, std::uint64_t seed, TimePoint horizon);

LatencyTrace generate_spikes(const RandomWalkSpikes& params, std::mt19937_64& rng, TimePoint horizon);

struct Arrive {
  Duration latency;
};
struct Drop {};
using SampleResult = std::variant<Arrive, Drop>;

/// Runtime state of one directed link: in-order delivery, drops and
/// optional blackhole windows.
class Link {
 public:
  Link(std::shared_ptr<const LatencyTrace> trace, double drop_prob, std::mt19937_64 rng);

  /// Send times must be non-decreasing.
  SampleResult sample(TimePoint send);

  /// Drops every message sent in [from, to).
  void add_blackhole(TimePoint from, TimePoint to);

  const LatencyTrace& trace() const { return *trace_; }

 private:
  std::shared_ptr<const LatencyTrace> trace_;
  double drop_prob_;
  std::mt19937_64 rng_;
  TimePoint last_send_;
  TimePoint last_arrival_;
  std::vector<std::pair<TimePoint, TimePoint>> blackholes_;
};

/// Trace CSV: header `time_us,latency_us`, one row per segment start,
/// step semantics. The final row marks the end of the covered range.
void write_trace_csv(const std::filesystem::path& path, const LatencyTrace& trace, TimePoint end);
LatencyTrace read_trace_csv(const std::filesystem::path& path);

/// Writes a deterministic spike trace covering [0, duration].
void generate_spike_trace(std::uint64_t seed, Duration duration, const RandomWalkSpikes& params,
                          const std::filesystem::path& path);

}  // namespace dbo
