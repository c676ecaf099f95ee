#pragma once

// Differential evolution over control parameters and the greedy
// harmonic-doubling stage scheduler.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pcd/capsule_model.hpp"
#include "pcd/fourier_control.hpp"
#include "pcd/simulator.hpp"

namespace pcd {

struct DEConfig {
  /// 0 selects 20 * dimension.
  std::size_t population_size = 0;
  double mutation = 0.8;
  double crossover = 0.9;
  std::size_t generations = 300;
  std::uint64_t seed = 42;
  double penalty = 1e3;

  std::size_t population_for(std::size_t dimension) const {
    return population_size == 0 ? 20 * dimension : population_size;
  }
};

void validate(const DEConfig& config, std::size_t dimension);

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t dimension() const { return lower.size(); }
};

/// Reflect each coordinate back into [lower, upper].
void reflect_into(std::span<double> x, const Box& box);

/// Must be safe to call concurrently.
using Objective = std::function<double(std::span<const double>)>;

enum class Execution { serial, parallel };

/// costs[i] = f(points[i]). The parallel kernel runs on OpenMP workers and
/// gives the same doubles as the serial reference.
void evaluate_population(const Objective& f, std::span<const std::vector<double>> points,
                         std::span<double> costs);
void evaluate_population_serial(const Objective& f, std::span<const std::vector<double>> points,
                                std::span<double> costs);

struct DEResult {
  std::vector<double> best;
  double best_cost = INFINITY;
  /// Best cost after generation 0, 1, ..., G.
  std::vector<double> history;
  std::size_t evaluations = 0;
};

/// DE/rand/1/bin with elitist one-to-one replacement (ties go to the trial).
/// Seeds enter generation 0 verbatim, the rest is uniform in the box. With
/// zero generations only the seeds (if any) are evaluated. All random draws
/// of a generation happen before its evaluations, so the result does not
/// depend on the execution mode or worker count.
DEResult de_minimize(const Objective& f, const Box& box, std::span<const std::vector<double>> seeds,
                     const DEConfig& config, Execution execution = Execution::parallel);

// --- control problem -------------------------------------------------------

enum class CostHorizon { one_period, full_horizon };

struct Stage {
  int harmonics = 3;
  double omega = 1.0;
  /// Periods in the validation run.
  int validation_periods = 24;
};

struct StagePlan {
  std::vector<Stage> stages;
  CostHorizon cost_horizon = CostHorizon::one_period;
};

/// (k, omega, periods) = (3, 1, 24), (6, 0.5, 12), (12, 0.25, 6).
StagePlan default_plan();

/// Each stage doubles k and halves omega relative to its predecessor.
void validate(const StagePlan& plan);

struct ProblemSetup {
  SystemParams system;
  ActuatorLimits limits;
  ControlBounds bounds;
  double step = 1e-3;
  bool zero_start = true;
  /// Search zero-mean controls only (periodic angle).
  bool zero_drift = true;
};

/// J = -distance + penalty * violation over `horizon`, with the angle bound
/// extended over `validation_repetitions` periods. Any reconstruction or
/// integration failure costs +penalty.
double cost(const ControlParams& params, const ProblemSetup& setup, double horizon,
            std::size_t validation_repetitions, double penalty);

/// cost() for one basis, sampling the pendulum from a shared table.
class StageObjective {
 public:
  StageObjective(const HarmonicBasis& basis, const ProblemSetup& setup, double cost_horizon,
                 std::size_t validation_repetitions, double penalty);

  double operator()(std::span<const double> point) const;
  double evaluate(const ControlParams& params) const;

 private:
  HarmonicBasis basis_;
  ProblemSetup setup_;
  std::size_t repetitions_;
  double penalty_;
  std::shared_ptr<const HarmonicTable> table_;
};

struct Validation {
  double distance = 0.0;
  ConstraintReport report;
};

/// Full-horizon run from rest combined with the multi-period constraint check.
Validation validate_law(const ControlLaw& law, const ProblemSetup& setup, double horizon);

struct StageResult {
  int harmonics = 0;
  double omega = 0.0;
  int validation_periods = 0;
  ControlParams best_params;
  ControlLaw law;
  /// Cost of best_params over the stage cost horizon.
  double best_cost = 0.0;
  /// Validation distance over validation_periods periods.
  double distance = 0.0;
  ConstraintReport report;
  std::size_t evaluations = 0;
  std::uint64_t seed = 0;
  /// The lifted previous solution was kept because the search did not beat it.
  bool carried_over = false;

  double validation_horizon() const;
};

using StageCallback = std::function<void(const StageResult&)>;

/// Stage 1 starts from a random population; each later stage seeds its
/// population with the lift of the previous best. Stage n uses seed
/// config.seed + n - 1. A stage keeps the exact lift of its predecessor unless
/// the search finds a control that validates better (feasible first, then a
/// strictly longer distance), so reported distances never decrease.
std::vector<StageResult> greedy_optimize(const StagePlan& plan, const ProblemSetup& setup,
                                         const DEConfig& config,
                                         const StageCallback& on_stage = {},
                                         Execution execution = Execution::parallel);

}  // namespace pcd
