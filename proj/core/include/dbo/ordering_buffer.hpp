#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "dbo/release_buffer.hpp"
#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

struct StragglerPolicy {
  bool enabled = true;
  Duration threshold = Duration::us(250);
  /// An excluded participant is re-admitted once its round-trip estimate
  /// drops below readmit_ratio * threshold.
  double readmit_ratio = 0.8;
};

struct StragglerTransition {
  TimePoint at;
  ParticipantId who;
  bool excluded;
};

struct ForwardedTrade {
  TradeView trade;
  TimePoint forwarded_at;
  std::uint64_t rank;
};

/// Total order used by the ordering buffer: (dc_tag, owner, seq).
struct OrderingKeyLess {
  bool operator()(const TradeView& a, const TradeView& b) const {
    if (auto c = a.dc_tag <=> b.dc_tag; c != 0) return c < 0;
    if (a.owner != b.owner) return a.owner < b.owner;
    return a.seq < b.seq;
  }
};

/// Sequencer at the exchange. Holds tagged trades in a priority queue and
/// forwards the head only once every other admitted participant has
/// reported a delivery clock strictly above the head's tag.
class OrderingBuffer {
 public:
  using GenerationLookup = std::function<TimePoint(PointId)>;

  /// With `piggyback`, a trade's tag also counts as coverage from its owner.
  OrderingBuffer(std::size_t participants, StragglerPolicy policy, TimePoint start = TimePoint::origin(),
                 bool piggyback = true);

  /// Throws ProtocolError when an owner's tag regresses.
  void on_trade(const TradeView& trade, TimePoint recv_time);

  void on_heartbeat(const Heartbeat& hb, TimePoint recv_time, const GenerationLookup& generation_of);

  /// Excludes participants not heard from for longer than the threshold.
  void check_silence(TimePoint now);

  std::vector<ForwardedTrade> release_ready(TimePoint now);

  /// Forwards everything still queued in key order (end-of-run drain).
  std::vector<ForwardedTrade> flush(TimePoint now);

  std::size_t participants() const { return known_dc_.size(); }
  std::size_t pending() const { return queue_.size(); }
  const std::optional<DeliveryClock>& known_dc(ParticipantId j) const { return known_dc_.at(j.value); }
  std::optional<Duration> rtt_estimate(ParticipantId j) const { return rtt_estimate_.at(j.value); }
  bool is_straggler(ParticipantId j) const { return straggler_.at(j.value); }
  const std::vector<StragglerTransition>& transitions() const { return transitions_; }

 private:
  void raise_known(ParticipantId j, const DeliveryClock& dc);
  void set_straggler(ParticipantId j, bool excluded, TimePoint at);
  ForwardedTrade pop(TimePoint now);

  StragglerPolicy policy_;
  bool piggyback_;
  struct HeadFirst {
    bool operator()(const TradeView& a, const TradeView& b) const { return OrderingKeyLess{}(b, a); }
  };
  std::priority_queue<TradeView, std::vector<TradeView>, HeadFirst> queue_;
  std::vector<std::optional<DeliveryClock>> known_dc_;
  std::vector<std::optional<Duration>> rtt_estimate_;
  std::vector<bool> straggler_;
  std::vector<TimePoint> last_heard_;
  std::vector<StragglerTransition> transitions_;
  std::uint64_t next_rank_ = 0;
};

/// Front-running guard: participant-originated data tagged with `tag` may
/// leave only once every release buffer has delivered tag.last_point.
/// `delivered_floor[j]` is the highest point RB j reports delivered.
bool gateway_release_ready(const DeliveryClock& tag, std::span<const std::optional<PointId>> delivered_floor);

/// Egress buffer applying gateway_release_ready to queued outbound messages.
class Gateway {
 public:
  struct Message {
    ParticipantId owner;
    std::uint64_t id;
    DeliveryClock tag;
    TimePoint submitted_at;
  };
  struct Released {
    Message message;
    TimePoint released_at;
  };

  explicit Gateway(std::size_t participants);

  void report_floor(ParticipantId rb, PointId delivered);
  void submit(Message m);
  std::vector<Released> release(TimePoint now);

  std::size_t buffered() const { return buffered_.size(); }
  std::span<const std::optional<PointId>> floors() const { return floors_; }

 private:
  std::vector<std::optional<PointId>> floors_;
  std::vector<Message> buffered_;
};

}  // namespace dbo
