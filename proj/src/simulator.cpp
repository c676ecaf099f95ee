#include "pcd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcd/error.hpp"

namespace pcd {

void validate(const ActuatorLimits& limits) {
  if (!(limits.theta_min < limits.theta_max))
    throw ConfigError("limits.theta", "theta_min must be < theta_max");
  if (!(limits.speed_max > 0.0)) throw ConfigError("limits.speed_max", "must be > 0");
  if (!(limits.u_max_torque > 0.0)) throw ConfigError("limits.u_max_torque", "must be > 0");
  if (!(limits.kappa >= 0.0)) throw ConfigError("limits.kappa", "must be >= 0");
  if (!(limits.torque_margin > 0.0 && limits.torque_margin <= 1.0))
    throw ConfigError("limits.torque_margin", "must be in (0, 1]");
}

double ConstraintReport::violation() const {
  auto pos = [](double excess) { return std::max(0.0, excess - kFeasibilityTolerance); };
  return pos(max_angle_excess) + pos(max_speed_excess) + pos(max_torque_deficit) +
         pos(max_leap_excess) + std::max(0.0, -min_contact_load);
}

void ConstraintReport::finalize() { feasible = violation() == 0.0; }

double leap_speed_bound(const SystemParams& params) { return std::sqrt(1.0 + params.gamma); }

void accumulate(ConstraintReport& report, const PendulumSample& s, const ActuatorLimits& limits,
                const SystemParams& params) {
  report.max_angle_excess =
      std::max({report.max_angle_excess, s.theta - limits.theta_max, limits.theta_min - s.theta});
  report.max_speed_excess =
      std::max(report.max_speed_excess, std::abs(s.theta_dot) - limits.speed_max);
  const double available =
      limits.torque_margin * std::abs(limits.u_max_torque - limits.kappa * s.theta_dot);
  const double required = std::abs(s.theta_ddot + std::sin(s.theta));
  report.max_torque_deficit = std::max(report.max_torque_deficit, required - available);
  report.max_leap_excess =
      std::max(report.max_leap_excess, s.theta_dot * s.theta_dot - (1.0 + params.gamma));
  report.min_contact_load = std::min(report.min_contact_load, contact_load(s, params));
  report.theta_low = std::min(report.theta_low, s.theta);
  report.theta_high = std::max(report.theta_high, s.theta);
}

void extrapolate_angle(ConstraintReport& report, double drift, std::size_t repetitions,
                       const ActuatorLimits& limits) {
  if (repetitions <= 1 || !std::isfinite(report.theta_low)) return;
  const double total = static_cast<double>(repetitions - 1) * drift;
  report.theta_high += std::max(0.0, total);
  report.theta_low += std::min(0.0, total);
  report.max_angle_excess = std::max({report.max_angle_excess,
                                      report.theta_high - limits.theta_max,
                                      limits.theta_min - report.theta_low});
}

std::size_t step_count(double horizon, double step) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be > 0");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("step", "must be > 0");
  const double n = std::round(horizon / step);
  return static_cast<std::size_t>(std::max(1.0, n));
}

HarmonicTable::HarmonicTable(int harmonics, double omega, double step, std::size_t steps)
    : harmonics_(harmonics), omega_(omega), step_(step), steps_(steps) {
  const std::size_t nodes = 2 * steps + 1;
  cos_.resize(nodes * K());
  sin_.resize(nodes * K());
  for (std::size_t m = 0; m < nodes; ++m) {
    const double tau = node_time(m, step);
    for (std::size_t j = 0; j < K(); ++j) {
      harmonic_phase(static_cast<double>(j + 1) * omega, tau, cos_[m * K() + j],
                     sin_[m * K() + j]);
    }
  }
}

namespace {

/// q(s) = c0 + c1 s + c2 s^2 through (0, f0), (h/2, fm), (h, f1).
struct Quadratic {
  double c0, c1, c2;

  Quadratic(double f0, double fm, double f1, double h)
      : c0(f0), c1((-3.0 * f0 + 4.0 * fm - f1) / h), c2((2.0 * f0 - 4.0 * fm + 2.0 * f1) / (h * h)) {}

  double operator()(double s) const { return c0 + s * (c1 + s * c2); }
};

/// Pendulum forces over one step, interpolated from the three samples.
struct StepForces {
  Quadratic r_y, r_z;

  StepForces(const StepSamples& q, const SystemParams& params, double h)
      : r_y(contact_load(q.start, params), contact_load(q.mid, params),
            contact_load(q.end, params), h),
        r_z(horizontal_force(q.start), horizontal_force(q.mid), horizontal_force(q.end), h) {}

  /// Positive once the pull leaves the friction cone.
  double excess(double s, double mu) const { return std::abs(r_z(s)) - mu * r_y(s); }
};

/// Bisection on [lo, hi] for a sign change of f (f(lo) and f(hi) differ in sign).
template <class F>
double crossing(F&& f, double lo, double hi) {
  const bool rising = f(lo) < 0.0;
  for (int i = 0; i < 60 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0.0) == rising) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Slide from rest at step offset s0 to the end of the step along dir.
CapsuleState slide_from_rest(const CapsuleState& base, double z0, double s0, double dir,
                             const StepForces& f, const SystemParams& params, double h) {
  const double inv_mass = 1.0 / (params.gamma + 1.0);
  // a(s0 + u) = alpha + beta u + gamma u^2
  const double c0 = (f.r_z.c0 - params.mu * dir * f.r_y.c0) * inv_mass;
  const double c1 = (f.r_z.c1 - params.mu * dir * f.r_y.c1) * inv_mass;
  const double c2 = (f.r_z.c2 - params.mu * dir * f.r_y.c2) * inv_mass;
  const double alpha = c0 + s0 * (c1 + s0 * c2);
  const double beta = c1 + 2.0 * c2 * s0;
  const double u = h - s0;
  CapsuleState next = base;
  const double v1 = u * (alpha + u * (beta / 2.0 + u * c2 / 3.0));
  const double z1 = z0 + u * u * (alpha / 2.0 + u * (beta / 6.0 + u * c2 / 12.0));
  if (dir * v1 <= 0.0) {
    next.z = z0;
    next.z_dot = 0.0;
    next.mode = FrictionMode::stick;
  } else {
    next.z = z1;
    next.z_dot = v1;
    next.mode = FrictionMode::slip;
  }
  return next;
}

}  // namespace

CapsuleState advance(const CapsuleState& state, const StepSamples& samples,
                     const SystemParams& params, double h) {
  CapsuleState next = state;
  next.tau = state.tau + h;
  double v = state.z_dot;
  double dir = sign(v);
  if (std::abs(v) <= kStickVelocityThreshold) {
    const double r_y = contact_load(samples.start, params);
    const double r_z = horizontal_force(samples.start);
    const FrictionResult f = friction_force(0.0, r_y, r_z, params);
    dir = sign(r_z);
    if (f.mode == FrictionMode::stick || dir == 0.0) {
      next.z_dot = 0.0;
      next.mode = FrictionMode::stick;
      // Breakaway inside the step: slide from the moment the pull leaves the cone.
      const double r_z1 = horizontal_force(samples.end);
      if (r_z1 != 0.0 && std::abs(r_z1) >= params.mu * contact_load(samples.end, params)) {
        const StepForces forces(samples, params, h);
        const double s0 =
            crossing([&](double s) { return forces.excess(s, params.mu); }, 0.0, h);
        return slide_from_rest(next, state.z, s0, sign(forces.r_z(s0)), forces, params, h);
      }
      return next;
    }
    // Breakaway: keep a slow start along the pull, drop one against it.
    if (sign(v) != dir) v = 0.0;
  }

  const double inv_mass = 1.0 / (params.gamma + 1.0);
  auto accel = [&](const PendulumSample& s) {
    return (horizontal_force(s) - params.mu * contact_load(s, params) * dir) * inv_mass;
  };
  const double a0 = accel(samples.start);
  const double am = accel(samples.mid);
  const double a1 = accel(samples.end);

  // Classical RK4 on (z, z') with a right-hand side depending on time only.
  const double v1 = v + h / 6.0 * (a0 + 4.0 * am + a1);
  const double z1 = state.z + h * v + h * h / 6.0 * (a0 + 2.0 * am);

  if (dir * v1 < 0.0) {
    // Velocity reaches zero inside the step: stop there, then stick or slide back.
    const Quadratic acc(a0, am, a1, h);
    auto speed = [&](double s) {
      return v + s * (acc.c0 + s * (acc.c1 / 2.0 + s * acc.c2 / 3.0));
    };
    const double s0 = crossing(speed, 0.0, h);
    const double z0 =
        state.z + s0 * (v + s0 * (acc.c0 / 2.0 + s0 * (acc.c1 / 6.0 + s0 * acc.c2 / 12.0)));
    const StepForces forces(samples, params, h);
    next.z = z0;
    next.z_dot = 0.0;
    next.mode = FrictionMode::stick;
    if (forces.excess(s0, params.mu) >= 0.0 && forces.r_z(s0) != 0.0)
      next = slide_from_rest(next, z0, s0, sign(forces.r_z(s0)), forces, params, h);
    if (!std::isfinite(next.z))
      throw IntegrationDiverged("non-finite capsule state at tau=" + std::to_string(next.tau));
    return next;
  }

  if (!std::isfinite(z1) || !std::isfinite(v1))
    throw IntegrationDiverged("non-finite capsule state at tau=" + std::to_string(next.tau));
  next.z = z1;
  next.z_dot = v1;
  next.mode = v1 == 0.0 ? FrictionMode::stick : FrictionMode::slip;
  return next;
}

CapsuleState step(const CapsuleState& state, const ControlLaw& law, const SystemParams& params,
                  double h) {
  StepSamples samples{law.sample(state.tau), law.sample(state.tau + 0.5 * h),
                      law.sample(state.tau + h)};
  return advance(state, samples, params, h);
}

namespace {

TrajectoryRecord make_record(const CapsuleState& state, const PendulumSample& s,
                             const SystemParams& params) {
  TrajectoryRecord r;
  r.tau = state.tau;
  r.theta = s.theta;
  r.theta_dot = s.theta_dot;
  r.theta_ddot = s.theta_ddot;
  r.z = state.z;
  r.z_dot = state.z_dot;
  r.r_y = contact_load(s, params);
  r.r_z = horizontal_force(s);
  const FrictionResult f = friction_force(state.z_dot, r.r_y, r.r_z, params);
  r.mode = f.mode;
  r.f_z = f.force;
  return r;
}

void check_finite(const PendulumSample& s, double tau) {
  if (!std::isfinite(s.theta) || !std::isfinite(s.theta_dot) || !std::isfinite(s.theta_ddot))
    throw IntegrationDiverged("non-finite pendulum sample at tau=" + std::to_string(tau));
}

template <class NodeSampler>
SimulationResult run(const NodeSampler& sample_node, std::size_t steps, const SystemParams& params,
                     const ActuatorLimits& limits, const SimulationOptions& options) {
  const double h = options.step;
  const std::size_t stride = std::max<std::size_t>(1, options.record_stride);
  SimulationResult out;
  if (options.record) out.trajectory.reserve(steps / stride + 2);

  CapsuleState state;
  PendulumSample start = sample_node(0);
  check_finite(start, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    accumulate(out.report, start, limits, params);
    if (options.record && i % stride == 0)
      out.trajectory.push_back(make_record(state, start, params));
    StepSamples samples{start, sample_node(2 * i + 1), sample_node(2 * i + 2)};
    check_finite(samples.end, node_time(2 * i + 2, h));
    state = advance(state, samples, params, h);
    state.tau = node_time(2 * i + 2, h);
    start = samples.end;
  }
  accumulate(out.report, start, limits, params);
  if (options.record) out.trajectory.push_back(make_record(state, start, params));
  out.report.finalize();
  out.final_state = state;
  out.distance = std::abs(state.z);
  return out;
}

}  // namespace

SimulationResult simulate(const ControlLaw& law, const SystemParams& params,
                          const ActuatorLimits& limits, double horizon,
                          const SimulationOptions& options) {
  const std::size_t steps = step_count(horizon, options.step);
  const double h = options.step;
  return run([&](std::size_t m) { return law.sample(node_time(m, h)); }, steps, params, limits,
             options);
}

SimulationResult simulate(const ControlLaw& law, const HarmonicTable& table,
                          const SystemParams& params, const ActuatorLimits& limits,
                          const SimulationOptions& options) {
  if (table.harmonics() != law.harmonics() || table.omega() != law.omega() ||
      table.step() != options.step)
    throw ConfigError("table", "harmonic table does not match the law or step");
  const double h = options.step;
  return run(
      [&](std::size_t m) {
        return law.sample(node_time(m, h), table.cos_at(m), table.sin_at(m));
      },
      table.steps(), params, limits, options);
}

ConstraintReport check_constraints(const ControlLaw& law, const ActuatorLimits& limits,
                                   const SystemParams& params, double horizon, double step) {
  const double period = law.period();
  const std::size_t n = step_count(period, step);
  ConstraintReport report;
  for (std::size_t i = 0; i <= n; ++i) accumulate(report, law.sample(node_time(2 * i, step)), limits, params);
  const double reps = std::ceil(horizon / period - 1e-9);
  extrapolate_angle(report, law.per_period_drift(), static_cast<std::size_t>(std::max(1.0, reps)),
                    limits);
  report.finalize();
  return report;
}

}  // namespace pcd
