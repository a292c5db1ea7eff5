#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dbo/config.hpp"
#include "dbo/netmodel.hpp"
#include "dbo/ordering_buffer.hpp"
#include "dbo/release_buffer.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// Everything known about one trade after a run, ground truth included.
struct TradeRecord {
  ParticipantId owner;
  TradeSeq seq;
  PointId trigger;
  Duration rt;
  TimePoint g;  ///< generation of the trigger
  TimePoint d;  ///< trigger handed to the participant
  TimePoint s;  ///< submission
  TimePoint stamped_at;
  std::optional<DeliveryClock> dc_tag;
  std::optional<TimePoint> f;
  std::optional<std::uint64_t> rank;
  Duration oracle;
  bool dropped = false;
  /// Still queued at the end-of-run flush.
  bool stalled = false;
  bool retransmitted_trigger = false;
  /// CloudEx: reached the exchange after S + th_rev.
  bool late_forward = false;

  bool forwarded() const { return f.has_value() && rank.has_value(); }
};

/// CloudEx market data that reached a participant after G + th_fwd.
struct LateDelivery {
  ParticipantId who;
  PointId point;
  Duration excess;
};

struct GatewayRelease {
  ParticipantId owner;
  std::uint64_t id;
  DeliveryClock tag;
  TimePoint submitted_at;
  TimePoint released_at;
};

struct TradeLog {
  std::string scheme;
  std::uint64_t seed = 0;
  ConfigMap config;
  std::size_t participants = 0;
  Duration horizon;
  bool uses_dc = false;
  bool paced = false;
  std::optional<RbMpBounds> rbmp;

  /// G per point id.
  std::vector<TimePoint> generated;
  /// Sorted by (owner, seq).
  std::vector<TradeRecord> trades;
  std::vector<DeliveryRecord> deliveries;
  /// [participant][point]: in-band delivery time; retransmitted points stay empty.
  std::vector<std::vector<std::optional<TimePoint>>> point_delivery;
  std::vector<StragglerTransition> transitions;
  std::vector<LateDelivery> late_deliveries;
  std::vector<GatewayRelease> gateway_releases;
  std::size_t retransmissions = 0;
};

}  // namespace dbo
