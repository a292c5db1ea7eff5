#include "dbo/engine.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <queue>
#include <random>
#include <tuple>

#include "dbo/ces.hpp"
#include "dbo/participants.hpp"
#include "dbo/rng.hpp"

namespace dbo {

namespace {

enum class Ev : std::uint8_t {
  PointGenerated,
  PointArrived,
  BatchDelivery,
  MpReceive,
  RetransmitArrived,
  TradeSubmitted,
  TradeAtRb,
  HeartbeatDue,
  TradeArrivedAtOb,
  HeartbeatArrived,
  GatewayArrived,
  ObTick,
};

int priority(Ev k) {
  switch (k) {
    case Ev::PointGenerated:
    case Ev::PointArrived:
      return 0;
    case Ev::BatchDelivery:
      return 1;
    case Ev::MpReceive:
    case Ev::RetransmitArrived:
      return 2;
    case Ev::TradeSubmitted:
    case Ev::TradeAtRb:
      return 3;
    case Ev::HeartbeatDue:
      return 4;
    case Ev::TradeArrivedAtOb:
    case Ev::HeartbeatArrived:
    case Ev::GatewayArrived:
      return 5;
    case Ev::ObTick:
      return 6;
  }
  return 7;
}

struct Event {
  TimePoint at;
  int prio;
  std::uint64_t seq;
  Ev kind;
  std::uint32_t who;
  std::uint64_t arg;
};

struct Later {
  bool operator()(const Event& x, const Event& y) const {
    return std::tie(x.at, x.prio, x.seq) > std::tie(y.at, y.prio, y.seq);
  }
};

struct PendingBatch {
  BatchId id;
  PointId last;
  std::vector<PointId> received;
};

struct Handoff {
  std::vector<PointId> points;
  bool retransmitted;
};

struct Participant {
  Participant(ReleaseBuffer buffer, MpProfile prof, std::uint64_t seed, std::uint32_t j)
      : rb(std::move(buffer)),
        profile(std::move(prof)),
        mp_rng(make_stream(seed, StreamTag::Participant, j)),
        drop_rng(make_stream(seed, StreamTag::UplinkLink, (std::uint64_t{1} << 32) | j)),
        rbmp_rng(make_stream(seed, StreamTag::RbMpLatency, j)),
        gateway_rng(make_stream(seed, StreamTag::Gateway, j)) {}

  ReleaseBuffer rb;
  MpProfile profile;
  std::mt19937_64 mp_rng;
  std::mt19937_64 drop_rng;
  std::mt19937_64 rbmp_rng;
  std::mt19937_64 gateway_rng;
  std::shared_ptr<const LatencyTrace> md_trace;
  std::shared_ptr<const LatencyTrace> up_trace;
  std::unique_ptr<Link> md;
  std::unique_ptr<Link> up;

  std::uint64_t next_expected = 0;
  std::optional<BatchId> open_batch;
  std::vector<PointId> open_received;
  std::deque<PendingBatch> pending;
  std::deque<Handoff> to_mp;
  std::deque<Heartbeat> hb_in_flight;
  SubmissionSchedule schedule;
  std::vector<std::size_t> trade_by_seq;
  TimePoint last_down;
  TimePoint last_up;
};

class Engine {
 public:
  explicit Engine(const RunConfig& c);
  TradeLog run();

 private:
  void push(TimePoint at, Ev kind, std::uint32_t who = 0, std::uint64_t arg = 0) {
    queue_.push(Event{at, priority(kind), next_seq_++, kind, who, arg});
  }

  void on_point_generated(TimePoint now, std::uint64_t pid);
  void on_point_arrived(TimePoint now, std::uint32_t j, std::uint64_t pid);
  void close_batch(TimePoint now, std::uint32_t j);
  void on_batch_delivery(TimePoint now, std::uint32_t j);
  void hand_to_mp(TimePoint t, std::uint32_t j, std::vector<PointId> points, bool retransmitted);
  void mp_receive(TimePoint t, std::uint32_t j, const std::vector<PointId>& points, bool retransmitted);
  void on_trade_submitted(TimePoint now, std::uint32_t j, std::size_t idx);
  void trade_at_rb(TimePoint now, std::uint32_t j, std::size_t idx);
  void on_trade_at_ob(TimePoint now, std::uint32_t j, std::size_t idx);
  void on_heartbeat_due(TimePoint now, std::uint32_t j);
  void on_heartbeat_arrived(TimePoint now, std::uint32_t j);
  void release(TimePoint now);
  void record_forwards(const std::vector<ForwardedTrade>& out, bool stalled);
  void finish(TimePoint last);
  Duration rbmp_leg(Participant& p);

  const RunConfig& c_;
  bool uses_dc_;
  std::optional<CloudExScheme> cloudex_;
  TimePoint end_;
  Duration tau_{};
  std::vector<MarketDataPoint> points_;
  std::vector<PointId> declared_last_;
  std::vector<Participant> parts_;
  std::optional<OrderingBuffer> ob_;
  Gateway gateway_;
  std::vector<Gateway::Message> gateway_msgs_;
  std::vector<TradeRecord> trades_;
  TradeLog log_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
};

Engine::Engine(const RunConfig& c)
    : c_(c), uses_dc_(uses_delivery_clock(c.scheme)), gateway_(c.num_mps) {
  validate_scheme(c.scheme);
  if (const auto* cx = std::get_if<CloudExScheme>(&c.scheme)) cloudex_ = *cx;
  end_ = TimePoint::origin() + c.duration + c.drain;
  if (uses_dc_) tau_ = heartbeat_period(c.scheme);

  points_ = generate_points(c.gen_interval, c.duration);
  std::vector<Batch> batches;
  Duration pace = Duration::zero();
  if (const auto* d = std::get_if<DboScheme>(&c.scheme)) {
    batches = assign_batches(points_, BatchingParams{d->delta, d->kappa, c.keepalive});
    pace = d->delta;
  } else {
    batches = singleton_batches(points_);
  }
  declared_last_.resize(points_.size());
  for (const auto& b : batches)
    for (const auto& p : b.points) declared_last_[p.id.value] = b.last_point();

  const TimePoint horizon = end_ + Duration::ms(1);
  for (std::uint32_t j = 0; j < c.num_mps; ++j) {
    const ParticipantId id(j);
    ReleaseBufferConfig rbc{pace, uses_dc_ ? tau_ : Duration::us(20), c.drift_for(id), TimePoint::origin()};
    Participant p(ReleaseBuffer(id, rbc), c.profile_for(id), c.seed, j);
    p.profile.validate();
    const LatencyModel md_model = c.model_for(LinkId{LinkKind::MarketData, id});
    const LatencyModel up_model = c.model_for(LinkId{LinkKind::Uplink, id});
    p.md_trace = std::make_shared<const LatencyTrace>(build_trace(md_model, {LinkKind::MarketData, id}, c.seed, horizon));
    p.up_trace = std::make_shared<const LatencyTrace>(build_trace(up_model, {LinkKind::Uplink, id}, c.seed, horizon));
    p.md = std::make_unique<Link>(p.md_trace, md_model.drop_prob, make_stream(c.seed, StreamTag::MarketDataLink, j));
    p.up = std::make_unique<Link>(p.up_trace, 0.0, make_stream(c.seed, StreamTag::UplinkLink, j));
    if (c.blackhole && c.blackhole->who == id) {
      const TimePoint to = c.blackhole->start + c.blackhole->length;
      p.md->add_blackhole(c.blackhole->start, to);
      p.up->add_blackhole(c.blackhole->start, to);
    }
    parts_.push_back(std::move(p));
  }
  if (uses_dc_) ob_.emplace(c.num_mps, c.straggler, TimePoint::origin());

  log_.scheme = std::string(scheme_name(c.scheme));
  log_.seed = c.seed;
  log_.config = echo_config(c);
  log_.participants = c.num_mps;
  log_.horizon = c.horizon;
  log_.uses_dc = uses_dc_;
  log_.paced = std::holds_alternative<DboScheme>(c.scheme);
  log_.rbmp = c.rbmp;
  log_.generated.reserve(points_.size());
  for (const auto& p : points_) log_.generated.push_back(p.generated_at);
  log_.point_delivery.assign(c.num_mps, std::vector<std::optional<TimePoint>>(points_.size()));
}

Duration Engine::rbmp_leg(Participant& p) {
  const std::int64_t lo = (c_.rbmp->low.count() + 1) / 2;
  const std::int64_t hi = std::max(lo, c_.rbmp->high.count() / 2);
  return Duration(std::uniform_int_distribution<std::int64_t>(lo, hi)(p.rbmp_rng));
}

void Engine::on_point_generated(TimePoint now, std::uint64_t pid) {
  for (std::uint32_t j = 0; j < parts_.size(); ++j) {
    const auto r = parts_[j].md->sample(now);
    if (const auto* a = std::get_if<Arrive>(&r)) push(now + a->latency, Ev::PointArrived, j, pid);
  }
  if (pid + 1 < points_.size()) push(points_[pid + 1].generated_at, Ev::PointGenerated, 0, pid + 1);
}

void Engine::on_point_arrived(TimePoint now, std::uint32_t j, std::uint64_t pid) {
  Participant& p = parts_[j];
  for (std::uint64_t m = p.next_expected; m < pid; ++m) {
    push(now + c_.retransmit_delay, Ev::RetransmitArrived, j, m);
    ++log_.retransmissions;
  }
  p.next_expected = pid + 1;
  const MarketDataPoint& pt = points_[pid];
  if (cloudex_) {
    const TimePoint due = pt.generated_at + cloudex_->th_fwd;
    if (now > due) log_.late_deliveries.push_back({ParticipantId(j), pt.id, now - due});
  }
  if (p.open_batch && *p.open_batch != pt.batch) close_batch(now, j);
  if (!p.open_batch) p.open_batch = pt.batch;
  p.open_received.push_back(pt.id);
  if (declared_last_[pid] == pt.id) close_batch(now, j);
}

void Engine::close_batch(TimePoint now, std::uint32_t j) {
  Participant& p = parts_[j];
  const PointId last = declared_last_[p.open_received.front().value];
  TimePoint not_before = TimePoint::origin();
  if (cloudex_) not_before = points_[last.value].generated_at + cloudex_->th_fwd;
  const TimePoint at = p.rb.on_batch_complete(*p.open_batch, now, not_before);
  p.pending.push_back({*p.open_batch, last, std::move(p.open_received)});
  p.open_received.clear();
  p.open_batch.reset();
  push(at, Ev::BatchDelivery, j);
}

void Engine::on_batch_delivery(TimePoint now, std::uint32_t j) {
  Participant& p = parts_[j];
  PendingBatch b = std::move(p.pending.front());
  p.pending.pop_front();
  log_.deliveries.push_back(p.rb.deliver(b.id, b.last, now));
  for (PointId x : b.received) log_.point_delivery[j][x.value] = now;
  hand_to_mp(now, j, std::move(b.received), false);
}

void Engine::hand_to_mp(TimePoint t, std::uint32_t j, std::vector<PointId> points, bool retransmitted) {
  Participant& p = parts_[j];
  if (!c_.rbmp) {
    mp_receive(t, j, points, retransmitted);
    return;
  }
  const TimePoint at = std::max(t + rbmp_leg(p), p.last_down);
  p.last_down = at;
  p.to_mp.push_back({std::move(points), retransmitted});
  push(at, Ev::MpReceive, j);
}

void Engine::mp_receive(TimePoint t, std::uint32_t j, const std::vector<PointId>& points, bool retransmitted) {
  Participant& p = parts_[j];
  std::vector<MarketDataPoint> pts;
  pts.reserve(points.size());
  for (PointId x : points) pts.push_back(points_[x.value]);
  p.schedule.forget_before(t);
  for (const RawTrade& raw : on_batch_delivered(p.profile, pts, t, p.mp_rng)) {
    const TimePoint s = p.schedule.claim(raw.submit_at);
    TradeRecord rec;
    rec.owner = raw.owner;
    rec.trigger = raw.trigger;
    rec.rt = s - t;
    rec.g = points_[raw.trigger.value].generated_at;
    rec.d = t;
    rec.s = s;
    rec.retransmitted_trigger = retransmitted;
    trades_.push_back(rec);
    push(s, Ev::TradeSubmitted, j, trades_.size() - 1);
  }
  if (c_.gateway_prob > 0.0 && std::bernoulli_distribution(c_.gateway_prob)(p.gateway_rng)) {
    const Gateway::Message m{ParticipantId(j), gateway_msgs_.size(), p.rb.read(t), t};
    gateway_msgs_.push_back(m);
    push(p.up_trace->fifo_arrival(t), Ev::GatewayArrived, j, m.id);
  }
}

void Engine::on_trade_submitted(TimePoint now, std::uint32_t j, std::size_t idx) {
  Participant& p = parts_[j];
  trades_[idx].seq = TradeSeq(p.trade_by_seq.size());
  p.trade_by_seq.push_back(idx);
  if (!c_.rbmp) {
    trade_at_rb(now, j, idx);
    return;
  }
  const TimePoint at = std::max(now + rbmp_leg(p), p.last_up);
  p.last_up = at;
  push(at, Ev::TradeAtRb, j, idx);
}

void Engine::trade_at_rb(TimePoint now, std::uint32_t j, std::size_t idx) {
  Participant& p = parts_[j];
  TradeRecord& t = trades_[idx];
  t.stamped_at = now;
  if (uses_dc_) t.dc_tag = p.rb.read(now);
  if (c_.drop_trade_prob > 0.0 && std::bernoulli_distribution(c_.drop_trade_prob)(p.drop_rng)) {
    t.dropped = true;
    return;
  }
  const auto r = p.up->sample(now);
  if (const auto* a = std::get_if<Arrive>(&r)) {
    push(now + a->latency, Ev::TradeArrivedAtOb, j, idx);
  } else {
    t.dropped = true;
  }
}

void Engine::on_trade_at_ob(TimePoint now, std::uint32_t j, std::size_t idx) {
  TradeRecord& t = trades_[idx];
  if (cloudex_) {
    const TimePoint due = t.s + cloudex_->th_rev;
    t.f = std::max(now, due);
    t.late_forward = now > due;
    return;
  }
  if (!uses_dc_) {
    t.f = now;
    return;
  }
  ob_->on_trade(TradeView{ParticipantId(j), t.seq, *t.dc_tag, t.stamped_at}, now);
  release(now);
}

void Engine::on_heartbeat_due(TimePoint now, std::uint32_t j) {
  Participant& p = parts_[j];
  const Heartbeat hb = p.rb.emit_heartbeat(now);
  const bool lost = c_.drop_hb_prob > 0.0 && std::bernoulli_distribution(c_.drop_hb_prob)(p.drop_rng);
  if (!lost) {
    const auto r = p.up->sample(now);
    if (const auto* a = std::get_if<Arrive>(&r)) {
      p.hb_in_flight.push_back(hb);
      push(now + a->latency, Ev::HeartbeatArrived, j);
    }
  }
  if (now + tau_ <= end_) push(now + tau_, Ev::HeartbeatDue, j);
}

void Engine::on_heartbeat_arrived(TimePoint now, std::uint32_t j) {
  Participant& p = parts_[j];
  const Heartbeat hb = p.hb_in_flight.front();
  p.hb_in_flight.pop_front();
  ob_->on_heartbeat(hb, now, [this](PointId x) { return points_[x.value].generated_at; });
  if (hb.dc.last_point) gateway_.report_floor(hb.owner, *hb.dc.last_point);
  release(now);
}

void Engine::release(TimePoint now) {
  if (ob_) record_forwards(ob_->release_ready(now), false);
  if (gateway_.buffered() == 0) return;
  for (const auto& r : gateway_.release(now))
    log_.gateway_releases.push_back({r.message.owner, r.message.id, r.message.tag, r.message.submitted_at, now});
}

void Engine::record_forwards(const std::vector<ForwardedTrade>& out, bool stalled) {
  for (const auto& ft : out) {
    TradeRecord& t = trades_[parts_[ft.trade.owner.value].trade_by_seq[ft.trade.seq.value]];
    t.f = ft.forwarded_at;
    t.rank = ft.rank;
    t.stalled = stalled;
  }
}

void Engine::finish(TimePoint last) {
  if (uses_dc_) {
    record_forwards(ob_->flush(last), true);
    log_.transitions = ob_->transitions();
  } else {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < trades_.size(); ++i)
      if (trades_[i].f) order.push_back(i);
    const bool by_submission = cloudex_.has_value();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const TradeRecord& x = trades_[a];
      const TradeRecord& y = trades_[b];
      if (*x.f != *y.f) return *x.f < *y.f;
      if (by_submission && x.s != y.s) return x.s < y.s;
      return std::tie(x.owner, x.seq) < std::tie(y.owner, y.seq);
    });
    for (std::size_t r = 0; r < order.size(); ++r) trades_[order[r]].rank = r;
  }

  std::vector<LinkTraces> links;
  for (const auto& p : parts_) links.push_back({p.md_trace.get(), p.up_trace.get()});
  for (auto& t : trades_) t.oracle = max_rtt_oracle(t.g, t.rt, links);

  std::sort(trades_.begin(), trades_.end(),
            [](const TradeRecord& a, const TradeRecord& b) { return std::tie(a.owner, a.seq) < std::tie(b.owner, b.seq); });
  log_.trades = std::move(trades_);
}

TradeLog Engine::run() {
  if (!points_.empty()) push(points_.front().generated_at, Ev::PointGenerated, 0, 0);
  if (uses_dc_) {
    for (std::uint32_t j = 0; j < parts_.size(); ++j) push(TimePoint::origin(), Ev::HeartbeatDue, j);
    push(TimePoint::origin(), Ev::ObTick);
  }
  TimePoint now = TimePoint::origin();
  while (!queue_.empty()) {
    const Event e = queue_.top();
    queue_.pop();
    now = e.at;
    switch (e.kind) {
      case Ev::PointGenerated:
        on_point_generated(now, e.arg);
        break;
      case Ev::PointArrived:
        on_point_arrived(now, e.who, e.arg);
        break;
      case Ev::BatchDelivery:
        on_batch_delivery(now, e.who);
        break;
      case Ev::MpReceive: {
        Handoff h = std::move(parts_[e.who].to_mp.front());
        parts_[e.who].to_mp.pop_front();
        mp_receive(now, e.who, h.points, h.retransmitted);
        break;
      }
      case Ev::RetransmitArrived:
        parts_[e.who].rb.on_retransmitted_point(PointId(e.arg), now);
        hand_to_mp(now, e.who, {PointId(e.arg)}, true);
        break;
      case Ev::TradeSubmitted:
        on_trade_submitted(now, e.who, e.arg);
        break;
      case Ev::TradeAtRb:
        trade_at_rb(now, e.who, e.arg);
        break;
      case Ev::HeartbeatDue:
        on_heartbeat_due(now, e.who);
        break;
      case Ev::TradeArrivedAtOb:
        on_trade_at_ob(now, e.who, e.arg);
        break;
      case Ev::HeartbeatArrived:
        on_heartbeat_arrived(now, e.who);
        break;
      case Ev::GatewayArrived:
        gateway_.submit(gateway_msgs_[e.arg]);
        release(now);
        break;
      case Ev::ObTick:
        ob_->check_silence(now);
        release(now);
        if (now + tau_ <= end_) push(now + tau_, Ev::ObTick);
        break;
    }
  }
  finish(now);
  return std::move(log_);
}

}  // namespace

TradeLog run(const RunConfig& config) { return Engine(config).run(); }

}  // namespace dbo
