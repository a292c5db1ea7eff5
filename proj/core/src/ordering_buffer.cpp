#include "dbo/ordering_buffer.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace dbo {

OrderingBuffer::OrderingBuffer(std::size_t participants, StragglerPolicy policy, TimePoint start, bool piggyback)
    : policy_(policy),
      piggyback_(piggyback),
      known_dc_(participants),
      rtt_estimate_(participants),
      straggler_(participants, false),
      last_heard_(participants, start) {
  if (policy_.enabled && policy_.threshold <= Duration::zero())
    throw std::invalid_argument("straggler threshold must be positive");
}

void OrderingBuffer::raise_known(ParticipantId j, const DeliveryClock& dc) {
  auto& known = known_dc_.at(j.value);
  if (!known || *known < dc) known = dc;
}

void OrderingBuffer::set_straggler(ParticipantId j, bool excluded, TimePoint at) {
  if (straggler_.at(j.value) == excluded) return;
  straggler_[j.value] = excluded;
  transitions_.push_back({at, j, excluded});
}

void OrderingBuffer::on_trade(const TradeView& trade, TimePoint recv_time) {
  const auto& known = known_dc_.at(trade.owner.value);
  if (known && trade.dc_tag < *known)
    throw ProtocolError(fmt::format("OB: trade {}/{} tag regressed below last reported clock", trade.owner.value,
                                    trade.seq.value));
  if (piggyback_) raise_known(trade.owner, trade.dc_tag);
  last_heard_[trade.owner.value] = std::max(last_heard_[trade.owner.value], recv_time);
  queue_.push(trade);
}

void OrderingBuffer::on_heartbeat(const Heartbeat& hb, TimePoint recv_time, const GenerationLookup& generation_of) {
  const auto j = hb.owner.value;
  raise_known(hb.owner, hb.dc);
  last_heard_.at(j) = std::max(last_heard_[j], recv_time);
  if (!hb.dc.last_point) return;
  // Round-trip proxy: delivery lag of the last point plus the uplink delay.
  const Duration rtt = (recv_time - generation_of(*hb.dc.last_point)) - hb.dc.elapsed;
  rtt_estimate_[j] = rtt;
  if (!policy_.enabled) return;
  if (rtt > policy_.threshold) {
    set_straggler(hb.owner, true, recv_time);
  } else if (straggler_[j] &&
             static_cast<double>(rtt.count()) < policy_.readmit_ratio * static_cast<double>(policy_.threshold.count())) {
    set_straggler(hb.owner, false, recv_time);
  }
}

void OrderingBuffer::check_silence(TimePoint now) {
  if (!policy_.enabled) return;
  for (std::size_t j = 0; j < last_heard_.size(); ++j)
    if (!straggler_[j] && now - last_heard_[j] > policy_.threshold) set_straggler(ParticipantId(j), true, now);
}

ForwardedTrade OrderingBuffer::pop(TimePoint now) {
  ForwardedTrade out{queue_.top(), now, next_rank_++};
  queue_.pop();
  return out;
}

std::vector<ForwardedTrade> OrderingBuffer::release_ready(TimePoint now) {
  std::vector<ForwardedTrade> out;
  if (queue_.empty()) return out;
  // Lowest and second-lowest coverage among admitted participants; the
  // head's own owner never has to cover itself.
  std::optional<std::size_t> low_who;
  std::optional<DeliveryClock> low, second;
  bool any = false, any_second = false;
  for (std::size_t j = 0; j < known_dc_.size(); ++j) {
    if (straggler_[j]) continue;
    if (!any || known_dc_[j] < low) {
      second = low;
      any_second = any;
      low = known_dc_[j];
      low_who = j;
      any = true;
    } else if (!any_second || known_dc_[j] < second) {
      second = known_dc_[j];
      any_second = true;
    }
  }
  while (!queue_.empty()) {
    const TradeView& head = queue_.top();
    const bool own_low = low_who && *low_who == head.owner.value;
    const bool has_cover = own_low ? any_second : any;
    const std::optional<DeliveryClock>& cover = own_low ? second : low;
    if (has_cover && !(cover && *cover > head.dc_tag)) break;
    out.push_back(pop(now));
  }
  return out;
}

std::vector<ForwardedTrade> OrderingBuffer::flush(TimePoint now) {
  std::vector<ForwardedTrade> out;
  while (!queue_.empty()) out.push_back(pop(now));
  return out;
}

bool gateway_release_ready(const DeliveryClock& tag, std::span<const std::optional<PointId>> delivered_floor) {
  if (!tag.last_point) return true;
  return std::all_of(delivered_floor.begin(), delivered_floor.end(),
                     [&](const std::optional<PointId>& f) { return f && *f >= *tag.last_point; });
}

Gateway::Gateway(std::size_t participants) : floors_(participants) {}

void Gateway::report_floor(ParticipantId rb, PointId delivered) {
  auto& f = floors_.at(rb.value);
  if (!f || *f < delivered) f = delivered;
}

void Gateway::submit(Message m) { buffered_.push_back(m); }

std::vector<Gateway::Released> Gateway::release(TimePoint now) {
  std::vector<Released> out;
  auto keep = std::stable_partition(buffered_.begin(), buffered_.end(),
                                    [&](const Message& m) { return !gateway_release_ready(m.tag, floors_); });
  for (auto it = keep; it != buffered_.end(); ++it) out.push_back({*it, now});
  buffered_.erase(keep, buffered_.end());
  return out;
}

}  // namespace dbo
