#include "dbo/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace dbo {

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::invalid_argument(fmt::format("{}: {}", field, message)), field_(std::move(field)) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "preset", "scheme", "num_mps", "gen_interval_us", "duration_ms", "delta_us", "kappa", "tau_us", "keepalive",
      "straggler_threshold_us", "straggler_readmit", "trace", "latency_us", "base_us", "skew_us", "jitter_us",
      "segment_us", "floor_us", "cap_us", "walk_us", "spike_rate_hz", "spike_decay_us", "trace_file", "seed",
      "trade_prob", "rt_min_us", "rt_max_us", "rt_fixed_us", "burst", "drop_md_prob", "drop_trade_prob",
      "drop_hb_prob", "retransmit_us", "rbmp_bl_us", "rbmp_bh_us", "drift_ppm", "cloudex_th_us", "cloudex_th_rev_us",
      "blackhole_mp", "blackhole_start_ms", "blackhole_ms", "drain_us", "gateway_prob"};
  return keys;
}

class Reader {
 public:
  explicit Reader(const ConfigMap& m) : m_(m) {}

  bool has(const std::string& key) const { return m_.contains(key); }

  const std::string& raw(const std::string& key) const {
    auto it = m_.find(key);
    if (it == m_.end()) throw ConfigError(key, "required key missing");
    return it->second;
  }

  double number(const std::string& key) const {
    const std::string& s = raw(key);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(key, fmt::format("not a number: '{}'", s));
    return v;
  }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  std::uint64_t unsigned_int(const std::string& key) const {
    const std::string& s = raw(key);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError(key, fmt::format("not a non-negative integer: '{}'", s));
    return v;
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t def) const {
    return has(key) ? unsigned_int(key) : def;
  }

  std::int64_t signed_int(const std::string& key, std::int64_t def) const {
    if (!has(key)) return def;
    const std::string& s = raw(key);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(key, fmt::format("not an integer: '{}'", s));
    return v;
  }

  Duration us(const std::string& key) const {
    try {
      return Duration::from_us(number(key));
    } catch (const TimeError& e) {
      throw ConfigError(key, e.what());
    }
  }
  Duration us(const std::string& key, Duration def) const { return has(key) ? us(key) : def; }
  Duration ms(const std::string& key, Duration def) const {
    if (!has(key)) return def;
    try {
      return Duration::from_us(number(key) * 1000.0);
    } catch (const TimeError& e) {
      throw ConfigError(key, e.what());
    }
  }

  Duration positive_us(const std::string& key) const {
    const Duration d = us(key);
    if (d <= Duration::zero()) throw ConfigError(key, "must be positive");
    return d;
  }

  double probability(const std::string& key, double def) const {
    const double p = number(key, def);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key, "must be a probability in [0,1]");
    return p;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string& s = raw(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(key, fmt::format("not a boolean: '{}'", s));
  }

  std::vector<Duration> us_list(const std::string& key) const {
    std::vector<Duration> out;
    if (!has(key) || raw(key).empty()) return out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      ConfigMap one{{key, trim(item)}};
      out.push_back(Reader(one).positive_us(key));
    }
    return out;
  }

 private:
  const ConfigMap& m_;
};

LatencyKind resolve_trace(const Reader& r) {
  const std::string kind = r.has("trace") ? r.raw("trace") : "spikes";
  if (kind == "constant") return ConstantLatency{r.us("latency_us", Duration::us(50))};
  if (kind == "jitter") {
    StaticOffsetJitter j{r.us("base_us", Duration::us(50)), r.us("skew_us", Duration::zero()),
                         r.us("jitter_us", Duration::zero()), r.us("segment_us", Duration::us(10))};
    if (j.segment <= Duration::zero()) throw ConfigError("segment_us", "must be positive");
    return j;
  }
  if (kind == "spikes") {
    RandomWalkSpikes s;
    s.floor = r.us("floor_us", s.floor);
    s.cap = r.us("cap_us", s.cap);
    s.walk = r.us("walk_us", s.walk);
    s.segment = r.us("segment_us", s.segment);
    s.spike_rate_hz = r.number("spike_rate_hz", s.spike_rate_hz);
    s.spike_decay = r.us("spike_decay_us", s.spike_decay);
    if (s.cap < s.floor) throw ConfigError("cap_us", "must be >= floor_us");
    if (s.segment <= Duration::zero()) throw ConfigError("segment_us", "must be positive");
    if (s.spike_decay <= Duration::zero()) throw ConfigError("spike_decay_us", "must be positive");
    if (s.spike_rate_hz < 0.0) throw ConfigError("spike_rate_hz", "must be non-negative");
    return s;
  }
  if (kind == "file") return FileReplay{r.raw("trace_file")};
  throw ConfigError("trace", fmt::format("unknown trace kind '{}'", kind));
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}", lineno), "expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("line {}", lineno), "empty key");
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

const std::map<std::string, ConfigMap>& presets() {
  static const std::map<std::string, ConfigMap> table{
      {"paper-sim",
       {{"scheme", "dbo"}, {"num_mps", "10"}, {"gen_interval_us", "40"}, {"duration_ms", "1000"},
        {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}, {"trace", "spikes"}, {"floor_us", "50"},
        {"cap_us", "400"}, {"walk_us", "20"}, {"segment_us", "10"}, {"spike_rate_hz", "50"},
        {"spike_decay_us", "50"}, {"trade_prob", "0.5"}, {"rt_min_us", "5"}, {"rt_max_us", "20"},
        {"straggler_threshold_us", "2000"}, {"cloudex_th_us", "150"}, {"seed", "1"}}},
      {"constant-net",
       {{"scheme", "dbo"}, {"num_mps", "10"}, {"gen_interval_us", "40"}, {"duration_ms", "1000"},
        {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}, {"trace", "jitter"}, {"base_us", "50"},
        {"skew_us", "5"}, {"jitter_us", "0"}, {"trade_prob", "0.5"}, {"rt_min_us", "5"}, {"rt_max_us", "20"},
        {"straggler_threshold_us", "250"}, {"cloudex_th_us", "150"}, {"seed", "1"}}},
      {"slow-trades",
       {{"scheme", "dbo"}, {"num_mps", "10"}, {"gen_interval_us", "10"}, {"duration_ms", "1000"},
        {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}, {"trace", "jitter"}, {"base_us", "50"},
        {"skew_us", "5"}, {"jitter_us", "0.25"}, {"segment_us", "10"}, {"trade_prob", "0.1"}, {"rt_min_us", "5"},
        {"rt_max_us", "40"}, {"straggler_threshold_us", "500"}, {"cloudex_th_us", "150"}, {"seed", "1"}}},
      {"straggler",
       {{"scheme", "dbo"}, {"num_mps", "10"}, {"gen_interval_us", "40"}, {"duration_ms", "600"},
        {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}, {"trace", "jitter"}, {"base_us", "50"},
        {"skew_us", "3"}, {"jitter_us", "1"}, {"segment_us", "10"}, {"trade_prob", "0.5"}, {"rt_min_us", "5"},
        {"rt_max_us", "20"}, {"straggler_threshold_us", "250"}, {"blackhole_mp", "3"},
        {"blackhole_start_ms", "300"}, {"blackhole_ms", "10"}, {"cloudex_th_us", "150"}, {"seed", "1"}}},
      {"rbmp-bounds",
       {{"scheme", "dbo"}, {"num_mps", "10"}, {"gen_interval_us", "40"}, {"duration_ms", "1000"},
        {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}, {"trace", "spikes"}, {"floor_us", "50"},
        {"cap_us", "400"}, {"walk_us", "20"}, {"segment_us", "10"}, {"spike_rate_hz", "50"},
        {"spike_decay_us", "50"}, {"trade_prob", "0.5"}, {"rt_min_us", "5"}, {"rt_max_us", "20"},
        {"rbmp_bl_us", "2"}, {"rbmp_bh_us", "8"}, {"straggler_threshold_us", "2000"}, {"cloudex_th_us", "150"},
        {"seed", "1"}}},
  };
  return table;
}

RunConfig resolve_config(const ConfigMap& input) {
  ConfigMap merged;
  if (auto it = input.find("preset"); it != input.end()) {
    auto p = presets().find(it->second);
    if (p == presets().end()) throw ConfigError("preset", fmt::format("unknown preset '{}'", it->second));
    merged = p->second;
  }
  for (const auto& [k, v] : input) {
    if (!known_keys().contains(k)) throw ConfigError(k, "unknown key");
    if (k != "preset") merged[k] = v;
  }
  const Reader r(merged);
  RunConfig c;

  const std::string scheme = r.has("scheme") ? r.raw("scheme") : "dbo";
  if (scheme == "dbo") {
    c.scheme = DboScheme{r.positive_us("delta_us"), r.number("kappa"), r.positive_us("tau_us")};
    if (!(std::get<DboScheme>(c.scheme).kappa > 0.0)) throw ConfigError("kappa", "must be positive");
  } else if (scheme == "direct") {
    c.scheme = DirectScheme{};
  } else if (scheme == "direct_dc") {
    c.scheme = DirectWithDcScheme{r.positive_us("tau_us")};
  } else if (scheme == "cloudex") {
    const Duration fwd = r.positive_us("cloudex_th_us");
    c.scheme = CloudExScheme{fwd, r.has("cloudex_th_rev_us") ? r.positive_us("cloudex_th_rev_us") : fwd};
  } else {
    throw ConfigError("scheme", fmt::format("unknown scheme '{}' (dbo|direct|direct_dc|cloudex)", scheme));
  }
  c.horizon = r.has("delta_us") ? r.positive_us("delta_us") : Duration::us(20);

  c.num_mps = r.unsigned_int("num_mps", 10);
  if (c.num_mps == 0) throw ConfigError("num_mps", "must be at least 1");
  c.gen_interval = r.us("gen_interval_us", c.gen_interval);
  if (c.gen_interval <= Duration::zero()) throw ConfigError("gen_interval_us", "must be positive");
  c.duration = r.ms("duration_ms", c.duration);
  if (c.duration < Duration::zero()) throw ConfigError("duration_ms", "must be non-negative");
  c.keepalive = r.boolean("keepalive", false);

  const Duration threshold = r.us("straggler_threshold_us", Duration::us(250));
  if (threshold < Duration::zero()) throw ConfigError("straggler_threshold_us", "must be non-negative");
  c.straggler.enabled = threshold > Duration::zero();
  c.straggler.threshold = c.straggler.enabled ? threshold : Duration::us(250);
  c.straggler.readmit_ratio = r.number("straggler_readmit", 0.8);
  if (!(c.straggler.readmit_ratio > 0.0 && c.straggler.readmit_ratio <= 1.0))
    throw ConfigError("straggler_readmit", "must be in (0,1]");

  const LatencyKind kind = resolve_trace(r);
  c.drop_md_prob = r.probability("drop_md_prob", 0.0);
  c.drop_trade_prob = r.probability("drop_trade_prob", 0.0);
  c.drop_hb_prob = r.probability("drop_hb_prob", 0.0);
  c.market_data_model = LatencyModel{kind, c.drop_md_prob};
  c.uplink_model = LatencyModel{kind, 0.0};
  c.retransmit_delay = r.us("retransmit_us", c.retransmit_delay);
  if (c.retransmit_delay < Duration::zero()) throw ConfigError("retransmit_us", "must be non-negative");

  c.seed = r.unsigned_int("seed", 1);
  c.trade_prob = r.probability("trade_prob", 0.5);
  c.rt_min = r.us("rt_min_us", c.rt_min);
  c.rt_max = r.us("rt_max_us", c.rt_max);
  if (c.rt_min <= Duration::zero()) throw ConfigError("rt_min_us", "must be positive");
  if (c.rt_max < c.rt_min) throw ConfigError("rt_max_us", "must be >= rt_min_us");
  c.rt_fixed = r.us_list("rt_fixed_us");
  if (!c.rt_fixed.empty() && c.rt_fixed.size() != c.num_mps)
    throw ConfigError("rt_fixed_us", "needs one value per participant");
  const auto burst = r.unsigned_int("burst", 1);
  if (burst == 0 || burst > 1000) throw ConfigError("burst", "must be in [1,1000]");
  c.burst = static_cast<unsigned>(burst);

  if (r.has("rbmp_bl_us") != r.has("rbmp_bh_us"))
    throw ConfigError(r.has("rbmp_bl_us") ? "rbmp_bh_us" : "rbmp_bl_us", "rbmp bounds need both ends");
  if (r.has("rbmp_bl_us")) {
    const Duration lo = r.us("rbmp_bl_us");
    const Duration hi = r.us("rbmp_bh_us");
    if (lo < Duration::zero()) throw ConfigError("rbmp_bl_us", "must be non-negative");
    if (hi < lo) throw ConfigError("rbmp_bh_us", "must be >= rbmp_bl_us");
    c.rbmp = RbMpBounds(lo, hi);
  }
  c.drift_ppm = r.signed_int("drift_ppm", 0);
  if (c.drift_ppm <= -1'000'000 || c.drift_ppm >= 1'000'000) throw ConfigError("drift_ppm", "magnitude must be < 1e6");

  if (r.has("blackhole_mp")) {
    const auto who = r.unsigned_int("blackhole_mp");
    if (who >= c.num_mps) throw ConfigError("blackhole_mp", "no such participant");
    c.blackhole = Blackhole{ParticipantId(who), TimePoint::origin() + r.ms("blackhole_start_ms", Duration::zero()),
                            r.ms("blackhole_ms", Duration::ms(10))};
    if (c.blackhole->length <= Duration::zero()) throw ConfigError("blackhole_ms", "must be positive");
  }
  c.drain = r.us("drain_us", c.drain);
  if (c.drain < Duration::zero()) throw ConfigError("drain_us", "must be non-negative");
  c.gateway_prob = r.probability("gateway_prob", 0.0);

  try {
    validate_scheme(c.scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scheme", e.what());
  }
  return c;
}

MpProfile RunConfig::profile_for(ParticipantId id) const {
  MpProfile p;
  p.id = id;
  p.trade_prob = trade_prob;
  p.burst = burst;
  if (!rt_fixed.empty()) {
    p.rt = FixedRt{rt_fixed.at(id.value)};
  } else {
    p.rt = UniformRt{rt_min, rt_max};
  }
  return p;
}

LatencyModel RunConfig::model_for(LinkId link) const {
  const auto& overrides = link.kind == LinkKind::MarketData ? market_data_override : uplink_override;
  if (link.participant.value < overrides.size() && overrides[link.participant.value])
    return *overrides[link.participant.value];
  return link.kind == LinkKind::MarketData ? market_data_model : uplink_model;
}

DriftPpm RunConfig::drift_for(ParticipantId id) const {
  return DriftPpm{id.value % 2 == 0 ? drift_ppm : -drift_ppm};
}

ConfigMap echo_config(const RunConfig& c) {
  ConfigMap m;
  auto us = [](Duration d) { return format_us(d.count()); };
  auto ms = [](Duration d) { return fmt::format("{}", static_cast<double>(d.count()) / 1e6); };
  m["scheme"] = std::string(scheme_name(c.scheme));
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DboScheme>) {
          m["kappa"] = fmt::format("{}", s.kappa);
          m["tau_us"] = us(s.tau);
        } else if constexpr (std::is_same_v<S, DirectWithDcScheme>) {
          m["tau_us"] = us(s.tau);
        } else if constexpr (std::is_same_v<S, CloudExScheme>) {
          m["cloudex_th_us"] = us(s.th_fwd);
          m["cloudex_th_rev_us"] = us(s.th_rev);
        }
      },
      c.scheme);
  m["delta_us"] = us(c.horizon);
  m["num_mps"] = std::to_string(c.num_mps);
  m["gen_interval_us"] = us(c.gen_interval);
  m["duration_ms"] = ms(c.duration);
  m["keepalive"] = c.keepalive ? "true" : "false";
  m["straggler_threshold_us"] = c.straggler.enabled ? us(c.straggler.threshold) : "0";
  m["straggler_readmit"] = fmt::format("{}", c.straggler.readmit_ratio);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantLatency>) {
          m["trace"] = "constant";
          m["latency_us"] = us(k.latency);
        } else if constexpr (std::is_same_v<K, StaticOffsetJitter>) {
          m["trace"] = "jitter";
          m["base_us"] = us(k.base);
          m["skew_us"] = us(k.skew_per_participant);
          m["jitter_us"] = us(k.jitter);
          m["segment_us"] = us(k.segment);
        } else if constexpr (std::is_same_v<K, RandomWalkSpikes>) {
          m["trace"] = "spikes";
          m["floor_us"] = us(k.floor);
          m["cap_us"] = us(k.cap);
          m["walk_us"] = us(k.walk);
          m["segment_us"] = us(k.segment);
          m["spike_rate_hz"] = fmt::format("{}", k.spike_rate_hz);
          m["spike_decay_us"] = us(k.spike_decay);
        } else {
          m["trace"] = "file";
          m["trace_file"] = k.path.string();
        }
      },
      c.market_data_model.kind);
  m["drop_md_prob"] = fmt::format("{}", c.drop_md_prob);
  m["drop_trade_prob"] = fmt::format("{}", c.drop_trade_prob);
  m["drop_hb_prob"] = fmt::format("{}", c.drop_hb_prob);
  m["retransmit_us"] = us(c.retransmit_delay);
  m["seed"] = std::to_string(c.seed);
  m["trade_prob"] = fmt::format("{}", c.trade_prob);
  m["rt_min_us"] = us(c.rt_min);
  m["rt_max_us"] = us(c.rt_max);
  if (!c.rt_fixed.empty()) {
    std::string list;
    for (std::size_t i = 0; i < c.rt_fixed.size(); ++i) list += (i ? "," : "") + us(c.rt_fixed[i]);
    m["rt_fixed_us"] = list;
  }
  m["burst"] = std::to_string(c.burst);
  if (c.rbmp) {
    m["rbmp_bl_us"] = us(c.rbmp->low);
    m["rbmp_bh_us"] = us(c.rbmp->high);
  }
  m["drift_ppm"] = std::to_string(c.drift_ppm);
  if (c.blackhole) {
    m["blackhole_mp"] = std::to_string(c.blackhole->who.value);
    m["blackhole_start_ms"] = ms(c.blackhole->start.since_origin());
    m["blackhole_ms"] = ms(c.blackhole->length);
  }
  m["drain_us"] = us(c.drain);
  m["gateway_prob"] = fmt::format("{}", c.gateway_prob);
  return m;
}

std::string format_config(const ConfigMap& map) {
  std::string out;
  for (const auto& [k, v] : map) out += fmt::format("{} = {}\n", k, v);
  return out;
}

}  // namespace dbo
