#include "pcd/cli.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "pcd/analysis.hpp"
#include "pcd/config.hpp"
#include "pcd/error.hpp"
#include "pcd/optimizer.hpp"
#include "pcd/serialization.hpp"
#include "pcd/simulator.hpp"
#include "pcd/tracking.hpp"

namespace fs = std::filesystem;

namespace pcd {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> stages;
  std::optional<int> horizon_periods;
  std::optional<double> step;
  std::optional<std::string> out_dir;
};

RunConfig resolve_config(const CommonOptions& o, bool plan_horizon = true) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) c.de.seed = *o.seed;
  if (o.stages) {
    if (*o.stages < 1 || static_cast<std::size_t>(*o.stages) > c.plan.stages.size())
      throw ConfigError("--stages", "must be in [1, " + std::to_string(c.plan.stages.size()) + "]");
    c.plan.stages.resize(static_cast<std::size_t>(*o.stages));
  }
  if (plan_horizon && o.horizon_periods) set_horizon_periods(c.plan, *o.horizon_periods);
  if (o.step) c.step = *o.step;
  if (o.out_dir) c.output_dir = *o.out_dir;
  validate(c);
  return c;
}

void apply_worker_count() {
  const char* env = std::getenv(kWorkersEnv);
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(kWorkersEnv, "must be a positive integer");
  omp_set_num_threads(static_cast<int>(n));
}

// Collects artifacts so the manifest can hash them once everything is written.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <class Fn>
  void write(const std::string& name, Fn&& fill) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output_dir", "cannot write '" + path.string() + "'");
    fill(out);
    out.close();
    if (!out) throw ConfigError("output_dir", "failed writing '" + path.string() + "'");
    names_.push_back(name);
  }

  void json(const std::string& name, const Json& j) {
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

  void manifest(const std::string& command, const RunConfig& config, Json extra = Json::object()) {
    Json hashes = Json::object();
    for (const auto& n : names_) hashes[n] = sha256_file((dir_ / n).string());
    Json m = {{"command", command},
              {"config", to_json(config)},
              {"seed", config.de.seed},
              {"artifacts", hashes}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    const fs::path path = dir_ / "run_manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

Json read_json_file(const std::string& path, const char* field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path + "'");
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::parse_error& e) {
    throw ConfigError(field, std::string("invalid JSON: ") + e.what());
  }
}

struct LoadedLaw {
  ControlLaw law;
  std::optional<int> periods;
};

// A stage file (with "law"), a bare law, or serialized ControlParams.
LoadedLaw load_law(const std::string& path) {
  const Json j = read_json_file(path, "params");
  if (!j.is_object()) throw ConfigError("params", "expected a JSON object");
  LoadedLaw out;
  if (j.contains("validation_periods") && j["validation_periods"].is_number_integer())
    out.periods = j["validation_periods"].get<int>();
  if (j.contains("law")) {
    out.law = control_law_from_json(j["law"]);
  } else if (j.contains("a0")) {
    out.law = control_law_from_json(j);
  } else {
    const Json& p = j.contains("params") ? j["params"] : j;
    out.law = reconstruct(control_params_from_json(p));
  }
  return out;
}

int cmd_optimize(const RunConfig& config, std::ostream& out) {
  apply_worker_count();
  ArtifactWriter writer(config.output_dir);
  const ProblemSetup setup = config.setup();
  Json summary_stages = Json::array();
  bool last_feasible = false;

  auto on_stage = [&](const StageResult& r) {
    const std::string k = std::to_string(r.harmonics);
    writer.json("stage_" + k + ".json", to_json(r, config.scaling));
    writer.write("control_" + k + ".csv",
                 [&](std::ostream& os) { write_control_csv(os, r.law, config.step); });
    SimulationOptions options;
    options.step = config.step;
    options.record_stride = config.trajectory_stride;
    const SimulationResult sim =
        simulate(r.law, setup.system, setup.limits, r.validation_horizon(), options);
    writer.write("trajectory_" + k + ".csv",
                 [&](std::ostream& os) { write_trajectory_csv(os, sim.trajectory); });
    const double horizon = r.validation_horizon();
    summary_stages.push_back({
        {"k", r.harmonics},
        {"omega", r.omega},
        {"periods", r.validation_periods},
        {"horizon_tau", horizon},
        {"horizon_s", config.scaling.to_seconds(horizon)},
        {"distance", r.distance},
        {"distance_cm", 100.0 * config.scaling.to_metres(r.distance)},
        {"speed_cm_per_s", average_speed_cm_per_s(r.distance, horizon, config.scaling)},
        {"feasible", r.report.feasible},
        {"carried_over", r.carried_over},
        {"best_cost", r.best_cost},
        {"evaluations", r.evaluations},
        {"seed", r.seed},
    });
    last_feasible = r.report.feasible;
    out << "stage k=" << r.harmonics << ": distance " << format_double(r.distance) << " ("
        << format_double(100.0 * config.scaling.to_metres(r.distance)) << " cm), "
        << (r.report.feasible ? "feasible" : "infeasible")
        << (r.carried_over ? ", carried over" : "") << '\n';
  };

  greedy_optimize(config.plan, setup, config.de, on_stage);
  writer.json("summary.json", {{"seed", config.de.seed}, {"stages", summary_stages}});
  writer.manifest("optimize", config);
  return last_feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const RunConfig& config, const std::string& params_path,
                 std::optional<int> horizon_periods, std::ostream& out) {
  const LoadedLaw loaded = load_law(params_path);
  const int periods = horizon_periods.value_or(loaded.periods.value_or(24));
  if (periods < 1) throw ConfigError("--horizon-periods", "must be >= 1");
  const ProblemSetup setup = config.setup();
  const double horizon = static_cast<double>(periods) * loaded.law.period();
  SimulationOptions options;
  options.step = config.step;
  options.record_stride = config.trajectory_stride;
  const SimulationResult sim = simulate(loaded.law, setup.system, setup.limits, horizon, options);
  const Validation v = validate_law(loaded.law, setup, horizon);

  ArtifactWriter writer(config.output_dir);
  writer.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, sim.trajectory); });
  writer.json("simulation.json",
              {{"periods", periods},
               {"horizon_tau", horizon},
               {"distance", sim.distance},
               {"distance_cm", 100.0 * config.scaling.to_metres(sim.distance)},
               {"speed_cm_per_s", average_speed_cm_per_s(sim.distance, horizon, config.scaling)},
               {"feasible", v.report.feasible},
               {"report", to_json(v.report)}});
  writer.manifest("simulate", config, {{"input", params_path}});
  out << "distance " << format_double(sim.distance) << ", "
      << (v.report.feasible ? "feasible" : "infeasible") << '\n';
  return v.report.feasible ? kExitOk : kExitInfeasible;
}

inline constexpr double kTrackingRmseTarget = 0.1;

int cmd_track(const RunConfig& config, const std::string& params_path,
              std::optional<int> horizon_periods, std::ostream& out) {
  const LoadedLaw loaded = load_law(params_path);
  const int periods = horizon_periods.value_or(loaded.periods.value_or(24));
  if (periods < 1) throw ConfigError("--horizon-periods", "must be >= 1");
  const double duration =
      static_cast<double>(periods) * loaded.law.period() / config.physical.scaling().omega();
  const TrackingResult result =
      track_simulate(loaded.law, config.physical, config.gains, duration, config.tracking);
  ArtifactWriter writer(config.output_dir);
  writer.write("tracking.csv", [&](std::ostream& os) { write_tracking_csv(os, result); });
  Json summary = tracking_summary(result);
  double worst = 0.0;
  for (double v : result.rmse_per_period) worst = std::max(worst, v);
  summary["rmse_target"] = kTrackingRmseTarget;
  summary["rmse_per_period_max"] = worst;
  summary["within_target"] = worst < kTrackingRmseTarget;
  writer.json("tracking_summary.json", summary);
  writer.manifest("track", config, {{"input", params_path}});
  out << "rmse full " << format_double(result.rmse_full) << ", worst period "
      << format_double(worst) << '\n';
  return kExitOk;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string default_time_column(const CsvTable& t) {
  for (const char* name : {"tau", "t"})
    for (const auto& h : t.header)
      if (h == name) return name;
  return t.header.front();
}

SignalSeries series_from(const CsvTable& table, const std::string& time, const std::string& value) {
  return {table.numbers(time), table.numbers(value)};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pendulum capsule drive: Fourier control optimization, simulation and tracking"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration (JSON or run manifest)");
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--stages", common.stages, "Run only the first N stages");
    sub->add_option("--horizon-periods", common.horizon_periods,
                    "Validation horizon in stage-1 periods");
    sub->add_option("--step", common.step, "Integration step (dimensionless)");
    sub->add_option("--out", common.out_dir, "Output directory");
  };

  auto* optimize = app.add_subcommand("optimize", "Greedy staged optimization");
  add_common(optimize);

  std::string params_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a stored control");
  add_common(simulate_cmd);
  simulate_cmd->add_option("params", params_path, "Stage JSON, law JSON or params JSON")->required();

  auto* track = app.add_subcommand("track", "Closed-loop tracking of a stored control");
  add_common(track);
  track->add_option("params", params_path, "Stage JSON, law JSON or params JSON")->required();

  auto* analyze = app.add_subcommand("analyze", "Metrics on stored results");
  analyze->require_subcommand(1);
  std::string file_a, file_b, time_column, ref_column = "theta", meas_column = "theta";
  std::optional<double> period;
  auto* rmse_cmd = analyze->add_subcommand("rmse", "RMSE between two series");
  rmse_cmd->add_option("reference", file_a)->required();
  rmse_cmd->add_option("measured", file_b)->required();
  rmse_cmd->add_option("--time", time_column, "Time column (default tau or t)");
  rmse_cmd->add_option("--ref-column", ref_column, "Reference value column");
  rmse_cmd->add_option("--meas-column", meas_column, "Measured value column");
  rmse_cmd->add_option("--period", period, "Also report RMSE per period");

  double v_num = 0.0, v_exp = 0.0;
  auto* delta_cmd = analyze->add_subcommand("delta", "Relative difference in percent");
  delta_cmd->add_option("v_num", v_num)->required();
  delta_cmd->add_option("v_exp", v_exp)->required();

  auto* segments_cmd = analyze->add_subcommand("segments", "Stick-slip phases of a trajectory");
  segments_cmd->add_option("trajectory", file_a)->required();
  segments_cmd->add_option("--time", time_column, "Time column (default tau or t)");

  double distance = 0.0, duration = 0.0;
  bool dimensionless = false;
  auto* speed_cmd = analyze->add_subcommand("speed", "Average speed");
  speed_cmd->add_option("distance", distance)->required();
  speed_cmd->add_option("duration", duration)->required();
  speed_cmd->add_flag("--dimensionless", dimensionless,
                      "Inputs are z and tau; report cm/s using the configured scaling");
  speed_cmd->add_option("--config", common.config_path, "Run configuration for the scaling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(resolve_config(common), out);
    if (simulate_cmd->parsed())
      return cmd_simulate(resolve_config(common, false), params_path, common.horizon_periods, out);
    if (track->parsed())
      return cmd_track(resolve_config(common, false), params_path, common.horizon_periods, out);

    Json report;
    if (rmse_cmd->parsed()) {
      const CsvTable ref = read_csv_file(file_a);
      const CsvTable meas = read_csv_file(file_b);
      const std::string tc = time_column.empty() ? default_time_column(ref) : time_column;
      const std::string mc = time_column.empty() ? default_time_column(meas) : time_column;
      const SignalSeries r = series_from(ref, tc, ref_column);
      const SignalSeries m = series_from(meas, mc, meas_column);
      report = {{"rmse", rmse(r, m)}, {"samples", r.size()}};
      if (period) report["rmse_per_period"] = per_period_rmse(r, m, *period);
    } else if (delta_cmd->parsed()) {
      report = {{"v_num", v_num},
                {"v_exp", v_exp},
                {"relative_difference_percent", relative_difference(v_num, v_exp)}};
    } else if (segments_cmd->parsed()) {
      const CsvTable table = read_csv_file(file_a);
      const std::string tc = time_column.empty() ? default_time_column(table) : time_column;
      const std::vector<double> t = table.numbers(tc);
      const std::vector<std::string> modes = table.strings("mode");
      std::vector<ModeSample> samples;
      for (std::size_t i = 0; i < t.size(); ++i)
        samples.push_back({t[i], friction_mode_from_string(modes[i])});
      const PhaseSegmentation segs = stick_slip_segments(samples);
      Json list = Json::array();
      double total = 0.0;
      for (const auto& s : segs) {
        list.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"mode", to_string(s.mode)}});
        total += s.duration();
      }
      report = {{"segments", list},
                {"count", segs.size()},
                {"total_duration", total},
                {"horizon", t.empty() ? 0.0 : t.back() - t.front()}};
    } else if (speed_cmd->parsed()) {
      if (dimensionless) {
        const RunConfig c =
            common.config_path.empty() ? RunConfig{} : load_run_config(common.config_path);
        report = {{"speed", average_speed_cm_per_s(distance, duration, c.scaling)},
                  {"units", "cm/s"}};
      } else {
        report = {{"speed", average_speed(distance, duration)}, {"units", "input"}};
      }
    }
    out << report.dump(2) << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrackingDiverged& e) {
    err << e.what() << '\n';
    return kExitNumerical;
  } catch (const IntegrationDiverged& e) {
    err << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace pcd
