#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "dbo/time.hpp"

namespace dbo {

/// Dense unsigned sequence number, distinct per tag type.
template <class Tag>
struct SeqId {
  std::uint64_t value = 0;

  constexpr SeqId() = default;
  constexpr explicit SeqId(std::uint64_t v) : value(v) {}

  friend constexpr auto operator<=>(SeqId, SeqId) = default;
  friend std::ostream& operator<<(std::ostream& os, SeqId id) { return os << id.value; }
};

using PointId = SeqId<struct PointIdTag>;
using ParticipantId = SeqId<struct ParticipantIdTag>;
using TradeSeq = SeqId<struct TradeSeqTag>;
using BatchId = SeqId<struct BatchIdTag>;

/// Delivery clock reading: the last market data point delivered to a
/// participant and the local time elapsed since that delivery.
///
/// An empty `last_point` is the pre-market sentinel; it orders below every
/// real point. Comparison is lexicographic on (last_point, elapsed).
struct DeliveryClock {
  std::optional<PointId> last_point;
  Duration elapsed;

  static DeliveryClock pre_market(Duration since_start) { return {std::nullopt, since_start}; }

  friend auto operator<=>(const DeliveryClock&, const DeliveryClock&) = default;
};

std::ostream& operator<<(std::ostream& os, const DeliveryClock& dc);

enum class DcOrdering { Less, Equal, Greater };

DcOrdering dc_compare(const DeliveryClock& a, const DeliveryClock& b);

/// Clock drift in parts per million applied to locally measured intervals.
struct DriftPpm {
  std::int64_t value = 0;
};

/// Reads the delivery clock at `now` given the last delivery.
/// Throws std::invalid_argument when `now` precedes `delivered_at`.
DeliveryClock dc_read(PointId last_point, TimePoint delivered_at, TimePoint now, DriftPpm drift = {});

/// Scales a locally measured interval by (1 + drift).
Duration apply_drift(Duration elapsed, DriftPpm drift);

struct MarketDataPoint {
  PointId id;
  TimePoint generated_at;
  BatchId batch;
  /// Content-free marker filling an otherwise empty batch window.
  bool keepalive = false;
};

/// Contiguous points whose generation times fall in one window
/// [window_start, window_end). Keepalive batches hold a single marker.
struct Batch {
  BatchId id;
  std::vector<MarketDataPoint> points;
  TimePoint window_start;
  TimePoint window_end;

  bool empty() const { return points.empty(); }
  PointId last_point() const { return points.back().id; }
};

/// A trade together with the ground truth the metrics need. Scheme logic
/// never sees `trigger` or `response_time`; it works on TradeView.
struct TaggedTrade {
  ParticipantId owner;
  TradeSeq seq;
  PointId trigger;
  Duration response_time;
  TimePoint submitted_at;
  std::optional<DeliveryClock> dc_tag;
  std::optional<TimePoint> forwarded_at;
  std::optional<std::uint64_t> forward_rank;
};

/// The part of a trade visible to release/ordering components.
struct TradeView {
  ParticipantId owner;
  TradeSeq seq;
  DeliveryClock dc_tag;
  /// Time the tag was applied at the release buffer.
  TimePoint stamped_at;
};

TradeView project(const TaggedTrade& t, TimePoint stamped_at);

struct Heartbeat {
  ParticipantId owner;
  DeliveryClock dc;
  TimePoint emitted_at;
};

}  // namespace dbo

template <class Tag>
struct std::hash<dbo::SeqId<Tag>> {
  std::size_t operator()(dbo::SeqId<Tag> id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
