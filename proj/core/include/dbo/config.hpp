#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbo/netmodel.hpp"
#include "dbo/ordering_buffer.hpp"
#include "dbo/participants.hpp"
#include "dbo/schemes.hpp"

namespace dbo {

/// Invalid or missing configuration value; `field()` names the key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

using ConfigMap = std::map<std::string, std::string>;

/// Cuts a participant's links for a window (crash / partition injection).
struct Blackhole {
  ParticipantId who;
  TimePoint start;
  Duration length;
};

struct RunConfig {
  SchemeKind scheme = DboScheme{Duration::us(20), 0.25, Duration::us(20)};
  std::size_t num_mps = 10;
  Duration gen_interval = Duration::us(40);
  Duration duration = Duration::ms(1000);
  /// Horizon used by conformance analysis; equals delta for DBO.
  Duration horizon = Duration::us(20);
  bool keepalive = false;
  StragglerPolicy straggler;

  LatencyModel market_data_model;
  LatencyModel uplink_model;
  /// Per-participant overrides (programmatic only; not serialized).
  std::vector<std::optional<LatencyModel>> market_data_override;
  std::vector<std::optional<LatencyModel>> uplink_override;
  double drop_md_prob = 0.0;
  double drop_trade_prob = 0.0;
  double drop_hb_prob = 0.0;
  Duration retransmit_delay = Duration::us(200);

  std::uint64_t seed = 1;
  double trade_prob = 0.5;
  Duration rt_min = Duration::us(5);
  Duration rt_max = Duration::us(20);
  /// Distinct fixed response time per participant (overrides the range).
  std::vector<Duration> rt_fixed;
  unsigned burst = 1;

  std::optional<RbMpBounds> rbmp;
  /// Drift magnitude; RB i runs at +drift for even i and -drift for odd i.
  std::int64_t drift_ppm = 0;
  std::optional<Blackhole> blackhole;
  /// Heartbeats keep running this long past the last point so in-flight
  /// trades drain before the final flush.
  Duration drain = Duration::us(2000);
  /// Probability that a delivered batch makes the participant emit an
  /// outbound message through the front-running gateway.
  double gateway_prob = 0.0;

  MpProfile profile_for(ParticipantId id) const;
  LatencyModel model_for(LinkId link) const;
  DriftPpm drift_for(ParticipantId id) const;
};

/// Parses `key = value` lines; `#` starts a comment.
ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::filesystem::path& path);

/// Built-in presets: paper-sim, constant-net, slow-trades, straggler,
/// rbmp-bounds.
const std::map<std::string, ConfigMap>& presets();

/// Resolves defaults (including a `preset` key) and validates.
RunConfig resolve_config(const ConfigMap& input);

/// Every key with its resolved value; resolve_config(echo) reproduces the run.
ConfigMap echo_config(const RunConfig& config);
std::string format_config(const ConfigMap& map);

}  // namespace dbo
