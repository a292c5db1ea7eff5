#include "dbo/netmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dbo/rng.hpp"

namespace dbo {

RbMpBounds::RbMpBounds(Duration lo, Duration hi) : low(lo), high(hi) {
  if (lo < Duration::zero() || hi < lo) throw std::invalid_argument("RbMpBounds requires 0 <= low <= high");
}

LatencyTrace::LatencyTrace(std::vector<TraceSegment> segments, std::optional<TimePoint> valid_until)
    : segments_(std::move(segments)), valid_until_(valid_until) {
  if (segments_.empty()) throw TraceError("latency trace has no segments");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    if (segments_[k].latency < Duration::zero())
      throw TraceError(fmt::format("negative latency in trace segment {}", k));
    if (k > 0 && segments_[k].start <= segments_[k - 1].start)
      throw TraceError(fmt::format("trace segment {} does not start after its predecessor", k));
  }
  envelope_.resize(segments_.size());
  std::int64_t latest = std::numeric_limits<std::int64_t>::min();
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    envelope_[k] = latest;
    if (k + 1 < segments_.size()) {
      const std::int64_t last_send = segments_[k + 1].start.count() - 1;
      latest = std::max(latest, last_send + segments_[k].latency.count());
    }
  }
}

std::size_t LatencyTrace::locate(TimePoint send) const {
  if (send < segments_.front().start)
    throw TraceError(fmt::format("trace query at {}us precedes first row (position 0)", format_us(send.count())));
  if (valid_until_ && send > *valid_until_)
    throw TraceError(fmt::format("trace exhausted at {}us (position {}, last row at {}us)", format_us(send.count()),
                                 segments_.size(), format_us(valid_until_->count())));
  auto it = std::upper_bound(segments_.begin(), segments_.end(), send,
                             [](TimePoint t, const TraceSegment& s) { return t < s.start; });
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

Duration LatencyTrace::raw_at(TimePoint send) const { return segments_[locate(send)].latency; }

TimePoint LatencyTrace::fifo_arrival(TimePoint send) const {
  const std::size_t k = locate(send);
  const std::int64_t own = detail::checked_add(send.count(), segments_[k].latency.count());
  return TimePoint(std::max(own, envelope_[k]));
}

LatencyTrace generate_spikes(const RandomWalkSpikes& p, std::mt19937_64& rng, TimePoint horizon) {
  if (p.floor < Duration::zero() || p.cap < p.floor) throw std::invalid_argument("spike trace requires 0 <= floor <= cap");
  if (p.segment <= Duration::zero()) throw std::invalid_argument("spike trace segment must be positive");
  if (p.spike_decay <= Duration::zero()) throw std::invalid_argument("spike decay must be positive");
  const std::int64_t span = (p.cap - p.floor).count();
  const std::int64_t walk_max = std::min(p.walk.count(), span);
  const std::int64_t walk_step = std::max<std::int64_t>(walk_max / 4, 0);
  const double step_s = static_cast<double>(p.segment.count()) * 1e-9;
  const double decay = std::exp(-static_cast<double>(p.segment.count()) / static_cast<double>(p.spike_decay.count()));
  std::bernoulli_distribution spike(1.0 - std::exp(-p.spike_rate_hz * step_s));
  std::uniform_int_distribution<std::int64_t> peak_dist(std::min<std::int64_t>(1, span), span);
  std::uniform_int_distribution<std::int64_t> walk_init(0, walk_max);
  std::uniform_int_distribution<std::int64_t> walk_delta(-walk_step, walk_step);

  std::int64_t walk = walk_init(rng);
  double excess = 0.0;
  std::vector<TraceSegment> segs;
  for (std::int64_t t = 0; t <= horizon.count(); t += p.segment.count()) {
    walk += walk_delta(rng);
    if (walk < 0) walk = -walk;
    if (walk > walk_max) walk = 2 * walk_max - walk;
    walk = std::clamp<std::int64_t>(walk, 0, walk_max);
    excess *= decay;
    if (excess < 1.0) excess = 0.0;
    if (span > 0 && spike(rng)) {
      const std::int64_t peak = peak_dist(rng);
      excess = std::max(excess, static_cast<double>(peak - walk));
    }
    const std::int64_t lat =
        std::clamp<std::int64_t>(p.floor.count() + walk + std::llround(excess), p.floor.count(), p.cap.count());
    if (segs.empty() || segs.back().latency.count() != lat) segs.push_back({TimePoint(t), Duration(lat)});
  }
  return LatencyTrace(std::move(segs));
}

namespace {

std::string expand_path(const std::filesystem::path& path, LinkId link) {
  std::string s = path.string();
  auto replace = [&s](std::string_view key, const std::string& value) {
    for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
      s.replace(pos, key.size(), value);
  };
  replace("{link}", link.kind == LinkKind::MarketData ? "md" : "up");
  replace("{i}", std::to_string(link.participant.value));
  return s;
}

std::uint64_t link_stream_index(LinkId link) { return link.participant.value; }

StreamTag link_tag(LinkId link) {
  return link.kind == LinkKind::MarketData ? StreamTag::MarketDataLink : StreamTag::UplinkLink;
}

}  // namespace

LatencyTrace build_trace(const LatencyModel& model, LinkId link, std::uint64_t seed, TimePoint horizon) {
  auto rng = make_stream(seed, StreamTag::Trace, (static_cast<std::uint64_t>(link_tag(link)) << 32) | link_stream_index(link));
  return std::visit(
      [&](const auto& kind) -> LatencyTrace {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, ConstantLatency>) {
          return LatencyTrace({{TimePoint::origin(), kind.latency}});
        } else if constexpr (std::is_same_v<K, StaticOffsetJitter>) {
          const Duration base = kind.base + kind.skew_per_participant * static_cast<std::int64_t>(link.participant.value);
          if (kind.jitter == Duration::zero()) return LatencyTrace({{TimePoint::origin(), base}});
          if (kind.segment <= Duration::zero()) throw std::invalid_argument("jitter segment must be positive");
          std::uniform_int_distribution<std::int64_t> jit(-kind.jitter.count(), kind.jitter.count());
          std::vector<TraceSegment> segs;
          for (std::int64_t t = 0; t <= horizon.count(); t += kind.segment.count()) {
            const auto lat = std::max<std::int64_t>(0, base.count() + jit(rng));
            if (segs.empty() || segs.back().latency.count() != lat) segs.push_back({TimePoint(t), Duration(lat)});
          }
          return LatencyTrace(std::move(segs));
        } else if constexpr (std::is_same_v<K, RandomWalkSpikes>) {
          return generate_spikes(kind, rng, horizon);
        } else {
          return read_trace_csv(expand_path(kind.path, link));
        }
      },
      model.kind);
}

Link::Link(std::shared_ptr<const LatencyTrace> trace, double drop_prob, std::mt19937_64 rng)
    : trace_(std::move(trace)), drop_prob_(drop_prob), rng_(rng) {
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw std::invalid_argument("drop probability must be in [0,1]");
}

void Link::add_blackhole(TimePoint from, TimePoint to) { blackholes_.emplace_back(from, to); }

SampleResult Link::sample(TimePoint send) {
  if (send < last_send_) throw std::logic_error("Link::sample: send times must be non-decreasing");
  last_send_ = send;
  bool dropped = false;
  if (drop_prob_ > 0.0) dropped = std::bernoulli_distribution(drop_prob_)(rng_);
  for (const auto& [from, to] : blackholes_)
    if (send >= from && send < to) dropped = true;
  const TimePoint arrival = std::max(trace_->fifo_arrival(send), last_arrival_);
  if (dropped) return Drop{};
  last_arrival_ = arrival;
  return Arrive{arrival - send};
}

void write_trace_csv(const std::filesystem::path& path, const LatencyTrace& trace, TimePoint end) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceError(fmt::format("cannot open {} for writing", path.string()));
  out << "time_us,latency_us\n";
  std::optional<TimePoint> last_written;
  for (const auto& seg : trace.segments()) {
    if (seg.start > end) break;
    out << format_us(seg.start.count()) << ',' << format_us(seg.latency.count()) << '\n';
    last_written = seg.start;
  }
  if (!last_written) throw TraceError("trace starts after the requested end");
  if (*last_written < end) out << format_us(end.count()) << ',' << format_us(trace.raw_at(end).count()) << '\n';
  out.flush();
  if (!out) throw TraceError(fmt::format("write to {} failed", path.string()));
}

namespace {

double parse_number(std::string_view field, std::size_t row, const std::string& file) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw TraceError(fmt::format("{}: row {}: malformed number '{}'", file, row, field));
  return v;
}

}  // namespace

LatencyTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(fmt::format("cannot open trace {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != "time_us,latency_us")
    throw TraceError(fmt::format("{}: expected header 'time_us,latency_us'", path.string()));
  std::vector<TraceSegment> segs;
  std::size_t row = 1;
  TimePoint last_time;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw TraceError(fmt::format("{}: row {}: expected two columns", path.string(), row));
    const double t = parse_number(std::string_view(line).substr(0, comma), row, path.string());
    const double l = parse_number(std::string_view(line).substr(comma + 1), row, path.string());
    const TimePoint start = TimePoint::from_us(t);
    const Duration lat = Duration::from_us(l);
    if (!segs.empty() && start <= segs.back().start)
      throw TraceError(fmt::format("{}: row {}: time not increasing", path.string(), row));
    last_time = start;
    if (segs.empty() || segs.back().latency != lat) segs.push_back({start, lat});
  }
  if (segs.empty()) throw TraceError(fmt::format("{}: no rows", path.string()));
  return LatencyTrace(std::move(segs), last_time);
}

void generate_spike_trace(std::uint64_t seed, Duration duration, const RandomWalkSpikes& params,
                          const std::filesystem::path& path) {
  if (duration <= Duration::zero()) throw std::invalid_argument("trace duration must be positive");
  auto rng = make_stream(seed, StreamTag::Trace, 0);
  const TimePoint end = TimePoint::origin() + duration;
  const LatencyTrace trace = generate_spikes(params, rng, end);
  write_trace_csv(path, trace, end);
}

}  // namespace dbo
