// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "pcd/analysis.hpp"
#include "pcd/cli.hpp"
#include "pcd/error.hpp"
#include "pcd/optimizer.hpp"
#include "pcd/serialization.hpp"
#include "pcd/simulator.hpp"
#include "pcd/tracking.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace pcd;
using namespace pcd::test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Golden-section search for the extremum of sense * u near t.
double polish(const ControlLaw& law, double t, double dt, double sense) {
  double a = t - dt, b = t + dt;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 80; ++i) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (sense * law.speed(c) > sense * law.speed(d)) b = d;
    else a = c;
  }
  return law.speed(0.5 * (a + b));
}

Outcome fourier_suite() {
  Outcome o;
  std::mt19937_64 rng(1);
  double worst_range = 0.0, worst_target = 0.0, worst_shape = 0.0, worst_span = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const ControlParams p = random_params(rng, 1 + n % 6);
    const ControlLaw law = reconstruct(p);
    const RangeTargets target = range_targets(p.span, p.bounds);
    const auto u = dense_speed(law, 2048 * static_cast<std::size_t>(p.basis.harmonics));
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    worst_range = std::max({worst_range, p.bounds.u_min - *lo, *hi - p.bounds.u_max});

    // Sampled extremes, polished around the best grid point, against the targets.
    const double dt = law.period() / u.size();
    const double top = polish(law, dt * (hi - u.begin()), dt, 1.0);
    const double bottom = polish(law, dt * (lo - u.begin()), dt, -1.0);
    worst_target = std::max({worst_target, std::abs(top - target.sup),
                             std::abs(bottom - target.inf)});
    const auto h = shape_amplitudes(p);
    const HatExtremes e = extremes_of_hat(h, p.basis);

    // Shape invariance and span scaling of an affine copy.
    const double a = uniform(rng, 0.1, 10.0), c = uniform(rng, -5, 5);
    const double span_u = *hi - *lo;
    for (std::size_t i = 0; i < u.size(); i += 7) {
      const double t = law.period() * i / u.size();
      const double shape_u = (u[i] - target.inf) / (target.sup - target.inf);
      const double shape_h = (evaluate_hat(h, p.basis.omega, t) - e.min) / (e.max - e.min);
      const double v = a * u[i] + c;
      const double shape_v = (v - (a * *lo + c)) / (a * span_u);
      worst_shape = std::max({worst_shape, std::abs(shape_u - shape_h),
                              std::abs(shape_v - (u[i] - *lo) / span_u)});
    }
    worst_span = std::max(worst_span, std::abs(((a * *hi + c) - (a * *lo + c)) - a * span_u) /
                                          std::max(1.0, a * span_u));
  }
  o.require(worst_range <= 1e-9, "range excess " + fmt(worst_range));
  o.require(worst_target <= 1e-6, "sup/inf mismatch " + fmt(worst_target));
  o.require(worst_shape <= 1e-10, "shape mismatch " + fmt(worst_shape));
  o.require(worst_span <= 1e-10, "span scaling " + fmt(worst_span));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("max range excess ") +
              fmt(worst_range) + ", target error " + fmt(worst_target) + ", shape error " +
              fmt(worst_shape);
  return o;
}

Outcome lift_exactness() {
  Outcome o;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const int K = std::array{1, 2, 3, 6}[done % 4];
    const bool zs = done % 2 == 0;
    ControlParams p = random_params(rng, K, zs, done % 3 != 0);
    if (zs) p.bounds = {-3.4, 3.4};
    ControlLaw law;
    try {
      law = reconstruct(p);
    } catch (const InfeasibleZeroStart&) {
      continue;
    }
    const ControlLaw lifted = reconstruct(lift(p));
    const ControlLaw exact = law.lifted();
    for (int i = 0; i < 10000; ++i) {
      const double t = lifted.period() * i / 10000.0;
      worst = std::max({worst, std::abs(lifted.speed(t) - law.speed(t)),
                        std::abs(exact.speed(t) - law.speed(t))});
    }
    ++done;
  }
  o.require(worst < 1e-10, "sup-norm " + fmt(worst));
  if (o.pass) o.detail = "sup-norm " + fmt(worst) + " over 100 controls";
  return o;
}

DEConfig small_de(std::uint64_t seed) {
  DEConfig c;
  c.population_size = 20;
  c.generations = 10;
  c.seed = seed;
  return c;
}

Outcome greedy_monotonicity() {
  Outcome o;
  const ProblemSetup setup;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto stages = greedy_optimize(default_plan(), setup, small_de(seed));
    const bool ok = stages[1].distance >= stages[0].distance &&
                    stages[2].distance >= stages[1].distance;
    o.require(ok, "seed " + std::to_string(seed) + " decreased");
    detail += "seed " + std::to_string(seed) + ": " + fmt(stages[0].distance) + " <= " +
              fmt(stages[1].distance) + " <= " + fmt(stages[2].distance) + "; ";
  }
  if (o.pass) o.detail = detail.substr(0, detail.size() - 2);
  return o;
}

struct K3Best {
  StageResult stage;
  std::uint64_t seed = 0;
};

std::optional<K3Best> k3_best;

Outcome table1_reproduction() {
  Outcome o;
  const ProblemSetup setup;
  StagePlan plan = default_plan();
  plan.stages.resize(1);
  std::string detail;
  for (std::uint64_t seed = 42; seed < 47; ++seed) {
    DEConfig de;
    de.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const StageResult r = greedy_optimize(plan, setup, de).front();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("  k=3 seed %llu: distance %.6f (%s, %.0f s)\n",
                static_cast<unsigned long long>(seed), r.distance,
                r.report.feasible ? "feasible" : "infeasible", secs);
    std::fflush(stdout);
    if (r.report.feasible && (!k3_best || r.distance > k3_best->stage.distance))
      k3_best = K3Best{r, seed};
  }
  o.require(k3_best.has_value(), "no feasible k=3 solution");
  if (k3_best) {
    const double d = k3_best->stage.distance;
    o.require(d >= 3.21, "best distance " + fmt(d) + " < 3.21");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("best distance ") + fmt(d) + " (" +
                fmt(100 * ScalingContext{}.to_metres(d)) + " cm) at seed " +
                std::to_string(k3_best->seed);
  }
  return o;
}

Outcome simulator_oracle() {
  Outcome o;
  const SystemParams sys;
  const ActuatorLimits limits;
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int found = 0;
  while (found < 10) {
    ControlParams p = random_params(rng, 3, true, true);
    p.basis.omega = 1.0;
    p.bounds = {-3.4, 3.4};
    p.span.p = uniform(rng, 0.3, 1.0);
    const ControlLaw law = reconstruct(p);
    const double horizon = law.period();
    if (!check_constraints(law, limits, sys, horizon).feasible) continue;
    SimulationOptions coarse, fine;
    coarse.record = fine.record = false;
    fine.step = 1e-6;
    const double a = simulate(law, sys, limits, horizon, coarse).final_state.z;
    const double b = simulate(law, sys, limits, horizon, fine).final_state.z;
    if (std::abs(b) < 1e-6) continue;
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
    ++found;
  }
  o.require(worst <= 1e-3, "relative error " + fmt(worst));
  const auto zero = simulate(law_from(0.0, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}), sys, limits,
                             24 * 2 * kPi);
  bool still = zero.distance == 0.0;
  for (const auto& r : zero.trajectory) still = still && r.z == 0.0;
  o.require(still, "zero control moved");
  if (o.pass) o.detail = "worst relative error " + fmt(worst) + " over 10 controls; zero control z = 0";
  return o;
}

Outcome constraint_arithmetic() {
  Outcome o;
  const SystemParams sys;
  const ActuatorLimits limits;
  const double leap = leap_speed_bound(sys);
  o.require(std::abs(leap - 3.937) < 5e-4, "leap bound " + fmt(leap));
  o.require(leap > limits.speed_max, "leap bound tighter than speed limit");

  const ControlLaw fast = law_from(0.0, {0.0}, {3.6});
  const auto fr = check_constraints(fast, limits, sys, fast.period());
  o.require(fr.max_speed_excess > 0.0 && fr.max_leap_excess < 0.0,
            "speed limit not reported as binding");

  const ControlLaw hard = law_from(0.0, {0.0}, {2.5});
  const auto hr = check_constraints(hard, limits, sys, hard.period());
  o.require(hr.max_torque_deficit > 0.0 && !hr.feasible, "torque check accepted violation");

  ConstraintReport c;
  accumulate(c, {0.0, 3.4, 0.0}, limits, sys);
  o.require(std::abs(-c.max_torque_deficit - 8.323) < 1e-9, "torque margin arithmetic");

  if (k3_best) {
    const auto& s = k3_best->stage;
    const auto rep = check_constraints(s.law, limits, sys, s.validation_horizon());
    o.require(rep.feasible && rep.max_torque_deficit <= kFeasibilityTolerance,
              "optimized k=3 rejected");
  } else {
    o.require(false, "no optimized k=3 solution");
  }
  if (o.pass)
    o.detail = "leap bound " + fmt(leap) + " > speed limit 3.4; torque margin 8.323; k=3 accepted";
  return o;
}

Outcome friction_parity() {
  Outcome o;
  const PhysicalParams phys;
  const ScalingContext sc = phys.scaling();
  const SystemParams sys = phys.system();
  const double W = sc.omega(), Fs = sc.force_scale();
  std::mt19937_64 rng(7);
  double worst = 0.0;
  bool modes = true;
  for (int i = 0; i < 1000; ++i) {
    const PendulumSample s{uniform(rng, -1, 1), uniform(rng, -3.4, 3.4), uniform(rng, -10, 10)};
    const double z_dot = i % 3 == 0 ? 0.0 : uniform(rng, -1, 1);
    const auto d = friction_force(z_dot, contact_load(s, sys), horizontal_force(s), sys);
    const double R_y = contact_load(s.theta, W * s.theta_dot, W * W * s.theta_ddot, phys);
    const double R_x = horizontal_force(s.theta, W * s.theta_dot, W * W * s.theta_ddot, phys);
    const auto p = friction_force(sc.l * W * z_dot, R_y, R_x, phys);
    modes = modes && p.mode == d.mode;
    const double scale = std::max(std::abs(Fs * d.force), 1e-300);
    worst = std::max(worst, std::abs(p.force - Fs * d.force) / scale);
  }
  o.require(worst <= 1e-10, "relative difference " + fmt(worst));
  o.require(modes, "mode mismatch");
  if (o.pass) o.detail = "worst relative difference " + fmt(worst) + " over 1000 states";
  return o;
}

Outcome tracking_suite() {
  Outcome o;
  const PhysicalParams phys;
  const ControlLaw zero = law_from(0.0, {0.0}, {0.0});
  const auto z = track_simulate(zero, phys, PIDGains{0, 0, 0, 0, 0, 100}, 5.0);
  o.require(z.rmse_full == 0.0, "zero run RMSE " + fmt(z.rmse_full));

  if (!k3_best) {
    o.require(false, "no optimized k=3 reference");
    return o;
  }
  const ControlLaw& law = k3_best->stage.law;
  const double duration = 24 * law.period() / phys.scaling().omega();

  const auto hard = track_simulate(law, phys, PIDGains{50, 10, 1, 0.01, 0.04, 100}, duration / 6);
  o.require(hard.max_torque_ratio <= 1.0 + 1e-12, "saturation exceeded");

  TrackingOptions ideal;
  ideal.ideal_tracking = true;
  const auto it = track_simulate(law, phys, PIDGains{}, duration, ideal);
  const auto sim = simulate(law, phys.system(), ActuatorLimits{}, 24 * law.period());
  const double travel = phys.l * std::abs(sim.distance);
  const double mismatch = std::abs(it.samples.back().x - phys.l * sim.final_state.z) / travel;
  o.require(mismatch < 0.01, "ideal tracking mismatch " + fmt(100 * mismatch) + "%");

  const auto tr = track_simulate(law, phys, PIDGains{}, duration);
  double worst = 0.0, mean = 0.0;
  for (double v : tr.rmse_per_period) {
    worst = std::max(worst, v);
    mean += v / tr.rmse_per_period.size();
  }
  o.require(worst < 0.1, "per-period RMSE " + fmt(worst) + " >= 0.1 rad");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("per-period RMSE mean ") + fmt(mean) +
              ", max " + fmt(worst) + " rad (threshold 0.1); ideal-tracking mismatch " +
              fmt(100 * mismatch) + "% of travel";
  return o;
}

Outcome metric_arithmetic() {
  Outcome o;
  o.require(std::abs(relative_difference(2.50, 2.48) - 0.8) < 1e-12, "relative difference");
  SignalSeries s, zero;
  for (int i = 0; i < 4000; ++i) {
    const double t = 4 * kPi * i / 4000.0;
    s.t.push_back(t);
    s.v.push_back(std::sin(t));
    zero.t.push_back(t);
    zero.v.push_back(0.0);
  }
  o.require(std::abs(rmse(s, zero) - 1 / std::sqrt(2.0)) < 1e-12, "sine RMSE");
  o.require(marker_angle({0, 0}, {0, 1}) == 0.0, "vertical marker");
  o.require(marker_angle({0, 0}, {1, 1}) == -kPi / 4, "marker (1,1)");
  o.require(marker_angle({0, 0}, {-1, 1}) == kPi / 4, "marker (-1,1)");
  if (o.pass) o.detail = "delta 0.8%, sine RMSE 1/sqrt(2), marker angles exact";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "pcd_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"de": {"population_size": 10, "generations": 4}})";
  for (const char* run : {"a", "b"}) {
    const std::string cfg = (dir / "cfg.json").string(), out = (dir / run).string();
    const char* argv[] = {"pcd", "optimize", "--config", cfg.c_str(), "--out", out.c_str()};
    std::ostringstream sink;
    const int code = run_cli(6, argv, sink, sink);
    o.require(code == kExitOk || code == kExitInfeasible, "run failed: " + sink.str());
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "run_manifest.json") continue;
    o.require(slurp(entry.path()) == slurp(dir / "b" / name), name + " differs");
    ++compared;
  }
  o.require(compared >= 7, "missing artifacts");
  if (o.pass) o.detail = std::to_string(compared) + " artifacts byte-identical";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // The k=3 search runs first: criteria 6 and 8 reuse its best control.
  const Criterion order[] = {
      {4, "k=3 desk-scale reproduction", table1_reproduction},
      {1, "Fourier parametrization", fourier_suite},
      {2, "lift exactness", lift_exactness},
      {3, "greedy monotonicity", greedy_monotonicity},
      {5, "simulator step oracle", simulator_oracle},
      {6, "constraint arithmetic", constraint_arithmetic},
      {7, "friction parity", friction_parity},
      {8, "tracking properties", tracking_suite},
      {9, "metric arithmetic", metric_arithmetic},
      {10, "determinism", determinism},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& c : order) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && r.pass;
    char head[128];
    std::snprintf(head, sizeof head, "criterion %2d %-30s %s (%.1f s)", c.id, c.name,
                  r.pass ? "PASS" : "FAIL", secs);
    lines[c.id] = std::string(head) + ": " + r.detail;
    std::printf("%s\n", lines[c.id].c_str());
    std::fflush(stdout);
  }
  std::printf("\nsummary\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all ? 0 : 1;
}
