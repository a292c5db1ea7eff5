#pragma once

#include <deque>
#include <optional>
#include <stdexcept>

#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// Violation of a message-ordering precondition between protocol components.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ReleaseBufferConfig {
  /// Minimum gap between consecutive deliveries (delta). Zero delivers on arrival.
  Duration pace_gap;
  /// Heartbeat period (tau), free-running from `start`.
  Duration heartbeat_period = Duration::us(20);
  DriftPpm drift;
  TimePoint start;
};

struct DeliveryRecord {
  ParticipantId rb;
  BatchId batch;
  PointId last_point;
  TimePoint at;
};

/// Trusted per-participant release buffer: paces batch delivery, keeps the
/// delivery clock and stamps outgoing trades and heartbeats with it.
class ReleaseBuffer {
 public:
  ReleaseBuffer(ParticipantId owner, ReleaseBufferConfig config);

  /// Registers a fully received batch and returns its delivery time:
  /// max(arrival, not_before, previous delivery + pace_gap).
  /// Batches must complete in increasing id order.
  TimePoint on_batch_complete(BatchId batch, TimePoint arrival, TimePoint not_before = TimePoint::origin());

  /// Delivers the oldest pending batch at its scheduled time. `last_point`
  /// is the batch's final point id as declared by the exchange, which keys
  /// the delivery clock even if that point itself was lost in transit.
  DeliveryRecord deliver(BatchId batch, PointId last_point, TimePoint t);

  DeliveryClock read(TimePoint now) const;

  /// Stamps `trade` with the delivery clock at `stamp_time`.
  TaggedTrade tag_trade(TaggedTrade trade, TimePoint stamp_time) const;

  Heartbeat emit_heartbeat(TimePoint t);

  /// A point recovered out of band after a loss. It is handed to the
  /// participant but leaves the delivery clock untouched.
  void on_retransmitted_point(PointId point, TimePoint t);

  ParticipantId owner() const { return owner_; }
  const ReleaseBufferConfig& config() const { return config_; }
  std::size_t queue_length() const { return pending_.size(); }
  std::optional<PointId> last_point() const { return last_point_; }
  std::optional<TimePoint> last_delivery() const { return last_delivery_; }
  std::size_t retransmitted_count() const { return retransmitted_; }

 private:
  struct Pending {
    BatchId batch;
    TimePoint deliver_at;
  };

  ParticipantId owner_;
  ReleaseBufferConfig config_;
  std::deque<Pending> pending_;
  std::optional<BatchId> last_completed_;
  std::optional<TimePoint> last_scheduled_;
  std::optional<PointId> last_point_;
  std::optional<TimePoint> last_delivery_;
  std::optional<TimePoint> last_heartbeat_;
  std::size_t retransmitted_ = 0;
};

}  // namespace dbo
