#include "pcd/optimizer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <string>

#include "pcd/error.hpp"

namespace pcd {

namespace {

// Portable draws on top of mt19937_64 (the std distributions are
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

std::size_t argmin(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void validate(const DEConfig& config, std::size_t dimension) {
  if (config.population_for(dimension) < 4)
    throw ConfigError("de.population_size", "must be >= 4");
  if (!(config.mutation > 0.0 && config.mutation <= 2.0))
    throw ConfigError("de.mutation", "must be in (0, 2]");
  if (!(config.crossover >= 0.0 && config.crossover <= 1.0))
    throw ConfigError("de.crossover", "must be in [0, 1]");
  if (!(config.penalty > 0.0)) throw ConfigError("de.penalty", "must be > 0");
}

void reflect_into(std::span<double> x, const Box& box) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double lo = box.lower[j];
    const double hi = box.upper[j];
    double v = x[j];
    for (int pass = 0; pass < 8 && (v < lo || v > hi); ++pass) {
      if (v < lo) v = lo + (lo - v);
      if (v > hi) v = hi - (v - hi);
    }
    x[j] = std::clamp(v, lo, hi);
  }
}

void evaluate_population_serial(const Objective& f, std::span<const std::vector<double>> points,
                                std::span<double> costs) {
  for (std::size_t i = 0; i < points.size(); ++i) costs[i] = f(points[i]);
}

void evaluate_population(const Objective& f, std::span<const std::vector<double>> points,
                         std::span<double> costs) {
  std::exception_ptr failure;
  const auto n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      costs[static_cast<std::size_t>(i)] = f(points[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(pcd_population_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

DEResult de_minimize(const Objective& f, const Box& box, std::span<const std::vector<double>> seeds,
                     const DEConfig& config, Execution execution) {
  const std::size_t dim = box.dimension();
  if (dim == 0 || box.upper.size() != dim) throw ConfigError("box", "empty or inconsistent box");
  validate(config, dim);
  for (const auto& s : seeds)
    if (s.size() != dim) throw ConfigError("seeds", "seed dimension mismatch");

  auto evaluate = [&](std::span<const std::vector<double>> pts, std::span<double> out) {
    if (execution == Execution::parallel)
      evaluate_population(f, pts, out);
    else
      evaluate_population_serial(f, pts, out);
  };

  DEResult result;
  if (config.generations == 0 && !seeds.empty()) {
    std::vector<double> costs(seeds.size());
    evaluate(seeds, costs);
    const std::size_t b = argmin(costs);
    result.best = seeds[b];
    result.best_cost = costs[b];
    result.history.push_back(result.best_cost);
    result.evaluations = seeds.size();
    return result;
  }

  const std::size_t np = config.population_for(dim);
  Rng rng(config.seed);
  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  for (std::size_t i = 0; i < np; ++i) {
    if (i < seeds.size()) {
      pop[i] = seeds[i];
      continue;
    }
    for (std::size_t j = 0; j < dim; ++j)
      pop[i][j] = box.lower[j] + rng.uniform() * (box.upper[j] - box.lower[j]);
  }
  std::vector<double> costs(np);
  evaluate(pop, costs);
  result.evaluations = np;
  std::size_t best = argmin(costs);
  result.history.push_back(costs[best]);

  std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
  std::vector<double> trial_costs(np);
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = rng.index(np); while (r1 == i);
      do r2 = rng.index(np); while (r2 == i || r2 == r1);
      do r3 = rng.index(np); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = rng.index(dim);
      auto& trial = trials[i];
      for (std::size_t j = 0; j < dim; ++j) {
        if (j == forced || rng.uniform() < config.crossover)
          trial[j] = pop[r1][j] + config.mutation * (pop[r2][j] - pop[r3][j]);
        else
          trial[j] = pop[i][j];
      }
      reflect_into(trial, box);
    }
    evaluate(trials, trial_costs);
    result.evaluations += np;
    for (std::size_t i = 0; i < np; ++i) {
      if (trial_costs[i] <= costs[i]) {
        std::swap(pop[i], trials[i]);
        costs[i] = trial_costs[i];
      }
    }
    best = argmin(costs);
    result.history.push_back(costs[best]);
  }
  result.best = pop[best];
  result.best_cost = costs[best];
  return result;
}

// --- control problem -------------------------------------------------------

StagePlan default_plan() {
  StagePlan plan;
  plan.stages = {{3, 1.0, 24}, {6, 0.5, 12}, {12, 0.25, 6}};
  return plan;
}

void validate(const StagePlan& plan) {
  if (plan.stages.empty()) throw ConfigError("stages", "plan has no stages");
  for (std::size_t n = 0; n < plan.stages.size(); ++n) {
    const Stage& s = plan.stages[n];
    const std::string field = "stages[" + std::to_string(n) + "]";
    validate(HarmonicBasis{s.harmonics, s.omega});
    if (s.validation_periods < 1) throw ConfigError(field + ".periods", "must be >= 1");
    if (n == 0) continue;
    const Stage& prev = plan.stages[n - 1];
    if (s.harmonics != 2 * prev.harmonics || s.omega != 0.5 * prev.omega)
      throw ConfigError(field, "each stage must double k and halve omega");
  }
}

namespace {

double penalized(const ControlLaw& law, const SimulationResult& sim, const ProblemSetup& setup,
                 std::size_t repetitions, double penalty) {
  ConstraintReport report = sim.report;
  extrapolate_angle(report, law.per_period_drift(), repetitions, setup.limits);
  const double j = -sim.distance + penalty * report.violation();
  return std::isfinite(j) ? j : penalty;
}

}  // namespace

double cost(const ControlParams& params, const ProblemSetup& setup, double horizon,
            std::size_t validation_repetitions, double penalty) {
  try {
    const ControlLaw law = reconstruct(params);
    SimulationOptions options;
    options.step = setup.step;
    options.record = false;
    const SimulationResult sim = simulate(law, setup.system, setup.limits, horizon, options);
    return penalized(law, sim, setup, validation_repetitions, penalty);
  } catch (const Error&) {
    return penalty;
  }
}

StageObjective::StageObjective(const HarmonicBasis& basis, const ProblemSetup& setup,
                               double cost_horizon, std::size_t validation_repetitions,
                               double penalty)
    : basis_(basis),
      setup_(setup),
      repetitions_(validation_repetitions),
      penalty_(penalty),
      table_(std::make_shared<HarmonicTable>(basis.harmonics, basis.omega, setup.step,
                                             step_count(cost_horizon, setup.step))) {}

double StageObjective::evaluate(const ControlParams& params) const {
  try {
    const ControlLaw law = reconstruct(params);
    SimulationOptions options;
    options.step = setup_.step;
    options.record = false;
    const SimulationResult sim = simulate(law, *table_, setup_.system, setup_.limits, options);
    return penalized(law, sim, setup_, repetitions_, penalty_);
  } catch (const Error&) {
    return penalty_;
  }
}

double StageObjective::operator()(std::span<const double> point) const {
  return evaluate(ControlParams::from_point(point, basis_, setup_.bounds, setup_.zero_start,
                                                setup_.zero_drift));
}

Validation validate_law(const ControlLaw& law, const ProblemSetup& setup, double horizon) {
  SimulationOptions options;
  options.step = setup.step;
  options.record = false;
  const SimulationResult sim = simulate(law, setup.system, setup.limits, horizon, options);
  const ConstraintReport periodic =
      check_constraints(law, setup.limits, setup.system, horizon, setup.step);
  Validation out;
  out.distance = sim.distance;
  out.report = sim.report;
  ConstraintReport& r = out.report;
  r.max_angle_excess = std::max(r.max_angle_excess, periodic.max_angle_excess);
  r.max_speed_excess = std::max(r.max_speed_excess, periodic.max_speed_excess);
  r.max_torque_deficit = std::max(r.max_torque_deficit, periodic.max_torque_deficit);
  r.max_leap_excess = std::max(r.max_leap_excess, periodic.max_leap_excess);
  r.min_contact_load = std::min(r.min_contact_load, periodic.min_contact_load);
  r.theta_low = std::min(r.theta_low, periodic.theta_low);
  r.theta_high = std::max(r.theta_high, periodic.theta_high);
  r.finalize();
  return out;
}

double StageResult::validation_horizon() const {
  return static_cast<double>(validation_periods) * HarmonicBasis{harmonics, omega}.period();
}

std::vector<StageResult> greedy_optimize(const StagePlan& plan, const ProblemSetup& setup,
                                         const DEConfig& config, const StageCallback& on_stage,
                                         Execution execution) {
  validate(plan);
  validate(setup.system);
  validate(setup.limits);
  std::vector<StageResult> results;
  for (std::size_t n = 0; n < plan.stages.size(); ++n) {
    const Stage& stage = plan.stages[n];
    const HarmonicBasis basis{stage.harmonics, stage.omega};
    const double period = basis.period();
    const double validation_horizon = static_cast<double>(stage.validation_periods) * period;
    const bool per_period = plan.cost_horizon == CostHorizon::one_period;
    const StageObjective objective(
        basis, setup, per_period ? period : validation_horizon,
        per_period ? static_cast<std::size_t>(stage.validation_periods) : 1, config.penalty);

    Box box;
    ControlParams::point_bounds(basis, setup.zero_start, setup.zero_drift, box.lower, box.upper);
    std::vector<std::vector<double>> seeds;
    std::optional<ControlParams> lifted;
    if (!results.empty()) {
      lifted = lift(results.back().best_params);
      seeds.push_back(lifted->to_point());
    }

    DEConfig stage_config = config;
    stage_config.seed = config.seed + n;
    const DEResult de = de_minimize(
        [&objective](std::span<const double> x) { return objective(x); }, box, seeds,
        stage_config, execution);

    StageResult r;
    r.harmonics = stage.harmonics;
    r.omega = stage.omega;
    r.validation_periods = stage.validation_periods;
    r.evaluations = de.evaluations;
    r.seed = stage_config.seed;

    const bool search_stayed = lifted && de.best == seeds.front();
    bool candidate_ok = false;
    if (!search_stayed) {
      r.best_params = ControlParams::from_point(de.best, basis, setup.bounds, setup.zero_start,
                                                setup.zero_drift);
      r.best_cost = de.best_cost;
      try {
        r.law = reconstruct(r.best_params);
        const Validation v = validate_law(r.law, setup, validation_horizon);
        r.distance = v.distance;
        r.report = v.report;
        candidate_ok = true;
      } catch (const Error&) {
        candidate_ok = false;
      }
    }

    if (lifted) {
      const StageResult& prev = results.back();
      const ControlLaw carried_law = prev.law.lifted();
      const Validation carried = validate_law(carried_law, setup, validation_horizon);
      const bool better =
          candidate_ok && (r.report.feasible > carried.report.feasible ||
                           (r.report.feasible == carried.report.feasible &&
                            r.distance > carried.distance));
      if (!better) {
        r.best_params = *lifted;
        r.law = carried_law;
        r.best_cost = objective.evaluate(*lifted);
        r.distance = carried.distance;
        r.report = carried.report;
        r.carried_over = true;
      }
    } else if (!candidate_ok) {
      throw Error("stage " + std::to_string(n + 1) + ": search found no reconstructible control");
    }

    if (on_stage) on_stage(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace pcd
