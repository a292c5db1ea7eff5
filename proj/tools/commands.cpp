#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dbo/config.hpp"
#include "dbo/engine.hpp"
#include "dbo/metrics.hpp"
#include "dbo/netmodel.hpp"

namespace dbo::cli {

namespace fs = std::filesystem;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config_path, "key = value config file");
  cmd->add_option("--preset", a.preset, "paper-sim | constant-net | slow-trades | straggler | rbmp-bounds");
  cmd->add_option("--set", a.sets, "override one key (key=value); repeatable");
  cmd->add_option("--seed", a.seed, "master seed (overrides config)");
}

ConfigMap gather(const ConfigArgs& a) {
  ConfigMap m;
  if (!a.config_path.empty()) {
    try {
      m = load_config_file(a.config_path);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }
  if (!a.preset.empty()) m["preset"] = a.preset;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
    m[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (a.seed) m["seed"] = std::to_string(*a.seed);
  return m;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << content;
  out.flush();
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(fmt::format("cannot create output directory {}", dir.string()));
}

struct Outcome {
  std::string summary;
  std::size_t trades = 0;
  double oracle_avg_us = 0.0;
};

Outcome execute(const RunConfig& config, const std::optional<fs::path>& out_dir) {
  const TradeLog log = run(config);
  Outcome o;
  o.summary = summary_row(log);
  o.trades = log.trades.size();
  o.oracle_avg_us = latency_stats(log).oracle_avg_us;
  if (out_dir) {
    std::ostringstream trades;
    write_trades_csv(trades, log);
    write_file(*out_dir / "trades.csv", trades.str());
    write_file(*out_dir / "summary.csv", summary_header() + "\n" + o.summary + "\n");
    write_file(*out_dir / "config.txt", format_config(log.config));
  }
  return o;
}

int cmd_run(const ConfigArgs& a, const std::string& out_dir, std::ostream& out) {
  const RunConfig config = resolve_config(gather(a));
  ensure_dir(out_dir);
  const Outcome o = execute(config, fs::path(out_dir));
  fmt::print(out, "{}\n{}\n", summary_header(), o.summary);
  return kOk;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"num_mps", "delta_us", "kappa", "tau_us", "scheme", "seed"};
  return axes;
}

int cmd_sweep(const ConfigArgs& a, const std::string& axis, const std::vector<std::string>& values,
              const std::string& out_dir, unsigned jobs, std::ostream& out) {
  if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end())
    throw ConfigError("axis", fmt::format("unknown sweep axis '{}'", axis));
  if (values.empty()) throw ConfigError("values", "no sweep values given");
  const ConfigMap base = gather(a);
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    ConfigMap m = base;
    m[axis] = v;
    configs.push_back(resolve_config(m));
  }
  ensure_dir(out_dir);

  std::vector<Outcome> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      try {
        const fs::path dir = fs::path(out_dir) / fmt::format("{}_{}", axis, values[k]);
        ensure_dir(dir);
        results[k] = execute(configs[k], dir);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, configs.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::string csv = fmt::format("axis,value,{},trades,oracle_avg_us\n", summary_header());
  for (std::size_t k = 0; k < configs.size(); ++k)
    csv += fmt::format("{},{},{},{},{:.3f}\n", axis, values[k], results[k].summary, results[k].trades,
                       results[k].oracle_avg_us);
  write_file(fs::path(out_dir) / "sweep.csv", csv);
  out << csv;
  return kOk;
}

int cmd_verify(const std::string& log_path, const ConfigArgs& a, std::ostream& out) {
  ConfigMap m;
  if (!a.config_path.empty() || !a.preset.empty() || !a.sets.empty()) {
    m = gather(a);
  } else {
    const fs::path echo = fs::path(log_path).parent_path() / "config.txt";
    if (fs::exists(echo)) {
      ConfigArgs sibling;
      sibling.config_path = echo.string();
      m = gather(sibling);
    } else {
      m = {{"scheme", "dbo"}, {"delta_us", "20"}, {"kappa", "0.25"}, {"tau_us", "20"}};
      fmt::print(out, "no config given; assuming scheme=dbo delta_us=20\n");
    }
  }
  const RunConfig config = resolve_config(m);
  std::ifstream in(log_path);
  if (!in) throw IoError(fmt::format("cannot read {}", log_path));
  const TradeLog log = read_trades_csv(in, config);
  const ConformanceReport report = conformance_checks(log);

  fmt::print(out, "trades {}\nc2_pairs {}\nc3_pairs {}\n", log.trades.size(), report.c2_pairs, report.c3_pairs);
  for (auto k : {ViolationKind::C2, ViolationKind::Causality, ViolationKind::C3, ViolationKind::ObSafety,
                 ViolationKind::Pacing, ViolationKind::GapConsistency})
    fmt::print(out, "{} {}\n", violation_name(k), report.count(k));
  for (const auto& s : report.skipped) fmt::print(out, "skipped {}\n", s);
  std::size_t shown = 0;
  for (const auto& v : report.violations) {
    if (++shown > 20) break;
    fmt::print(out, "violation {}: {}\n", violation_name(v.kind), v.detail);
  }
  return report.clean() ? kOk : kViolations;
}

int cmd_gen_trace(std::uint64_t seed, double duration_ms, const RandomWalkSpikes& params, const std::string& path,
                  std::ostream& out) {
  if (!(duration_ms > 0.0)) throw ConfigError("duration_ms", "must be positive");
  generate_spike_trace(seed, Duration::from_us(duration_ms * 1000.0), params, path);
  fmt::print(out, "wrote {}\n", path);
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delivery-based ordering simulator"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  std::string run_out = "out";
  auto* run_cmd = app.add_subcommand("run", "execute one simulation");
  add_config_flags(run_cmd, run_args);
  run_cmd->add_option("--out", run_out, "output directory");

  ConfigArgs sweep_args;
  std::string sweep_out = "sweep";
  std::string axis;
  std::vector<std::string> values;
  unsigned jobs = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of a parameter");
  add_config_flags(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--axis", axis, "num_mps | delta_us | kappa | tau_us | scheme | seed")->required();
  sweep_cmd->add_option("--values", values, "comma separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs (0 = all cores)");

  ConfigArgs verify_args;
  std::string log_path;
  auto* verify_cmd = app.add_subcommand("verify", "check a per-trade CSV for protocol violations");
  verify_cmd->add_option("log", log_path, "per-trade CSV")->required();
  add_config_flags(verify_cmd, verify_args);

  std::uint64_t trace_seed = 1;
  double trace_ms = 1000.0;
  std::string trace_out = "trace.csv";
  double floor_us = 50, cap_us = 400, walk_us = 20, segment_us = 10, rate_hz = 50, decay_us = 50;
  auto* trace_cmd = app.add_subcommand("gen-trace", "write a spike latency trace");
  trace_cmd->add_option("--seed", trace_seed);
  trace_cmd->add_option("--duration-ms", trace_ms);
  trace_cmd->add_option("--out", trace_out);
  trace_cmd->add_option("--floor-us", floor_us);
  trace_cmd->add_option("--cap-us", cap_us);
  trace_cmd->add_option("--walk-us", walk_us);
  trace_cmd->add_option("--segment-us", segment_us);
  trace_cmd->add_option("--rate-hz", rate_hz);
  trace_cmd->add_option("--decay-us", decay_us);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(run_args, run_out, out);
    if (*sweep_cmd) return cmd_sweep(sweep_args, axis, values, sweep_out, jobs, out);
    if (*verify_cmd) return cmd_verify(log_path, verify_args, out);
    if (*trace_cmd) {
      RandomWalkSpikes p;
      p.floor = Duration::from_us(floor_us);
      p.cap = Duration::from_us(cap_us);
      p.walk = Duration::from_us(walk_us);
      p.segment = Duration::from_us(segment_us);
      p.spike_rate_hz = rate_hz;
      p.spike_decay = Duration::from_us(decay_us);
      return cmd_gen_trace(trace_seed, trace_ms, p, trace_out, out);
    }
  } catch (const ConfigError& e) {
    fmt::print(err, "invalid config: {}\n", e.what());
    return kInvalid;
  } catch (const CsvError& e) {
    fmt::print(err, "malformed log: {}\n", e.what());
    return kInvalid;
  } catch (const IoError& e) {
    fmt::print(err, "i/o error: {}\n", e.what());
    return kIo;
  } catch (const TraceError& e) {
    fmt::print(err, "trace error: {}\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace dbo::cli
