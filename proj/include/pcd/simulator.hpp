#pragma once

// Fixed-step integration of the capsule under a prescribed pendulum motion,
// with Coulomb stick-slip switching, plus the actuator/contact constraint set.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "pcd/capsule_model.hpp"
#include "pcd/fourier_control.hpp"

namespace pcd {

struct CapsuleState {
  double tau = 0.0;
  double z = 0.0;
  double z_dot = 0.0;
  FrictionMode mode = FrictionMode::stick;
};

struct TrajectoryRecord {
  double tau = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  double theta_ddot = 0.0;
  double z = 0.0;
  double z_dot = 0.0;
  FrictionMode mode = FrictionMode::stick;
  double r_y = 0.0;
  double r_z = 0.0;
  double f_z = 0.0;
};

using Trajectory = std::vector<TrajectoryRecord>;

struct ActuatorLimits {
  double theta_min = -std::numbers::pi / 3.0;
  double theta_max = std::numbers::pi / 3.0;
  double speed_max = 3.4;
  double u_max_torque = 25.0;
  double kappa = 10.85;
  /// Fraction of the available motor torque that may be used.
  double torque_margin = 0.7;
};

void validate(const ActuatorLimits& limits);

/// Tolerance under which an excess still counts as satisfied (sampling and
/// reconstruction rounding sit far below it).
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Worst-case margins over the checked samples; every excess is <= 0 when its
/// constraint holds.
struct ConstraintReport {
  double max_angle_excess = -INFINITY;
  double max_speed_excess = -INFINITY;
  double max_torque_deficit = -INFINITY;
  double max_leap_excess = -INFINITY;
  double min_contact_load = INFINITY;
  bool feasible = true;

  // Observed angle range, kept for multi-period drift extrapolation.
  double theta_low = INFINITY;
  double theta_high = -INFINITY;

  /// Sum of positive parts of the excesses beyond the tolerance (and of a
  /// negative contact load).
  double violation() const;
  void finalize();
};

/// Fold one sample into the report (feasible is refreshed by finalize()).
void accumulate(ConstraintReport& report, const PendulumSample& s, const ActuatorLimits& limits,
                const SystemParams& params);

/// Replace the angle excess by the bound over `repetitions` repeated periods
/// of a control whose angle gains `drift` per period: j drift + theta(s), j = 0..repetitions-1.
void extrapolate_angle(ConstraintReport& report, double drift, std::size_t repetitions,
                       const ActuatorLimits& limits);

/// Leap bound on |theta'|: sqrt(1 + gamma).
double leap_speed_bound(const SystemParams& params);

struct SimulationOptions {
  double step = 1e-3;
  /// Keep every n-th step in the trajectory (the final state is always kept).
  std::size_t record_stride = 1;
  bool record = true;
};

struct SimulationResult {
  Trajectory trajectory;
  ConstraintReport report;
  double distance = 0.0;
  CapsuleState final_state;
};

/// Node times tau_m = m h/2 used by every sampling path.
inline double node_time(std::size_t m, double step) {
  return static_cast<double>(m) * (0.5 * step);
}

/// Number of steps covering `horizon` (rounded to the nearest whole step).
std::size_t step_count(double horizon, double step);

/// Precomputed cos/sin((j+1) omega tau_m) on the half-step nodes of a fixed
/// horizon, so repeated simulations of laws sharing a basis skip the trig.
class HarmonicTable {
 public:
  HarmonicTable(int harmonics, double omega, double step, std::size_t steps);

  int harmonics() const { return harmonics_; }
  double omega() const { return omega_; }
  double step() const { return step_; }
  std::size_t steps() const { return steps_; }

  std::span<const double> cos_at(std::size_t node) const {
    return {cos_.data() + node * K(), K()};
  }
  std::span<const double> sin_at(std::size_t node) const {
    return {sin_.data() + node * K(), K()};
  }

 private:
  std::size_t K() const { return static_cast<std::size_t>(harmonics_); }
  int harmonics_;
  double omega_;
  double step_;
  std::size_t steps_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Pendulum samples at step start, midpoint and end.
struct StepSamples {
  PendulumSample start;
  PendulumSample mid;
  PendulumSample end;
};

/// Advance one step. Stick/slip is resolved at the start; a slipping step
/// integrates z'' with the friction direction frozen (RK4, exact for a
/// time-only right-hand side); a reversal of z' inside the step clamps z' to 0
/// at the linearly interpolated crossing and returns to stick.
CapsuleState advance(const CapsuleState& state, const StepSamples& samples,
                     const SystemParams& params, double h);

/// One step driven by a control law.
CapsuleState step(const CapsuleState& state, const ControlLaw& law, const SystemParams& params,
                  double h);

/// Integrate from rest (z = z' = 0, stick) over `horizon`. The constraint
/// report covers every step node. Throws IntegrationDiverged on non-finite state.
SimulationResult simulate(const ControlLaw& law, const SystemParams& params,
                          const ActuatorLimits& limits, double horizon,
                          const SimulationOptions& options = {});

/// Same integration with the pendulum sampled from a precomputed table; the
/// table must match the law's basis. Bit-identical to the direct path.
SimulationResult simulate(const ControlLaw& law, const HarmonicTable& table,
                          const SystemParams& params, const ActuatorLimits& limits,
                          const SimulationOptions& options = {});

/// Constraint report over one period sampled every `step`, with the angle
/// bound extended over all periods needed to cover `horizon`.
ConstraintReport check_constraints(const ControlLaw& law, const ActuatorLimits& limits,
                                   const SystemParams& params, double horizon,
                                   double step = 1e-3);

}  // namespace pcd
