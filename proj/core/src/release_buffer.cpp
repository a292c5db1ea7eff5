#include "dbo/release_buffer.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace dbo {

ReleaseBuffer::ReleaseBuffer(ParticipantId owner, ReleaseBufferConfig config) : owner_(owner), config_(config) {
  if (config_.pace_gap < Duration::zero()) throw std::invalid_argument("pace gap must be non-negative");
  if (config_.heartbeat_period <= Duration::zero()) throw std::invalid_argument("heartbeat period must be positive");
}

TimePoint ReleaseBuffer::on_batch_complete(BatchId batch, TimePoint arrival, TimePoint not_before) {
  if (last_completed_ && batch <= *last_completed_)
    throw ProtocolError(fmt::format("RB {}: batch {} completed after batch {}", owner_.value, batch.value,
                                    last_completed_->value));
  last_completed_ = batch;
  TimePoint at = std::max(arrival, not_before);
  if (last_scheduled_) at = std::max(at, *last_scheduled_ + config_.pace_gap);
  last_scheduled_ = at;
  pending_.push_back({batch, at});
  return at;
}

DeliveryRecord ReleaseBuffer::deliver(BatchId batch, PointId last_point, TimePoint t) {
  if (pending_.empty() || pending_.front().batch != batch)
    throw ProtocolError(fmt::format("RB {}: batch {} is not at the head of the queue", owner_.value, batch.value));
  if (pending_.front().deliver_at != t)
    throw ProtocolError(fmt::format("RB {}: batch {} delivered off schedule", owner_.value, batch.value));
  if (last_point_ && last_point < *last_point_)
    throw ProtocolError(fmt::format("RB {}: delivered point id regressed", owner_.value));
  pending_.pop_front();
  last_point_ = last_point;
  last_delivery_ = t;
  return DeliveryRecord{owner_, batch, last_point, t};
}

DeliveryClock ReleaseBuffer::read(TimePoint now) const {
  if (!last_point_) {
    if (now < config_.start) throw std::invalid_argument("read before release buffer start");
    return DeliveryClock::pre_market(apply_drift(now - config_.start, config_.drift));
  }
  return dc_read(*last_point_, *last_delivery_, now, config_.drift);
}

TaggedTrade ReleaseBuffer::tag_trade(TaggedTrade trade, TimePoint stamp_time) const {
  if (trade.owner != owner_) throw ProtocolError("trade tagged by a foreign release buffer");
  trade.dc_tag = read(stamp_time);
  return trade;
}

Heartbeat ReleaseBuffer::emit_heartbeat(TimePoint t) {
  if (last_heartbeat_ && t < *last_heartbeat_) throw ProtocolError("heartbeat emitted out of time order");
  last_heartbeat_ = t;
  return Heartbeat{owner_, read(t), t};
}

void ReleaseBuffer::on_retransmitted_point(PointId, TimePoint) { ++retransmitted_; }

}  // namespace dbo
