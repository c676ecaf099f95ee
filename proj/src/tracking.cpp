#include "pcd/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcd/error.hpp"

namespace pcd {

void validate(const PhysicalParams& p) {
  if (!(p.M > 0.0)) throw ConfigError("physical.M", "must be > 0");
  if (!(p.m > 0.0)) throw ConfigError("physical.m", "must be > 0");
  if (!(p.l > 0.0)) throw ConfigError("physical.l", "must be > 0");
  if (!(p.g > 0.0)) throw ConfigError("physical.g", "must be > 0");
  if (!(p.k_spring >= 0.0)) throw ConfigError("physical.k_spring", "must be >= 0");
  if (!(p.c_damp >= 0.0)) throw ConfigError("physical.c_damp", "must be >= 0");
  if (!(p.mu >= 0.0)) throw ConfigError("physical.mu", "must be >= 0");
  if (!(p.M_max > 0.0)) throw ConfigError("physical.M_max", "must be > 0");
  if (!(p.omega_max > 0.0)) throw ConfigError("physical.omega_max", "must be > 0");
}

void validate(const PIDGains& g) {
  if (!(g.Kp >= 0.0)) throw ConfigError("gains.Kp", "must be >= 0");
  if (!(g.Ki >= 0.0)) throw ConfigError("gains.Ki", "must be >= 0");
  if (!(g.Kd >= 0.0)) throw ConfigError("gains.Kd", "must be >= 0");
  if (!(g.u_f >= 0.0)) throw ConfigError("gains.u_f", "must be >= 0");
  if (!(g.u_0 >= 0.0)) throw ConfigError("gains.u_0", "must be >= 0");
  if (!(g.loop_rate > 0.0)) throw ConfigError("gains.loop_rate", "must be > 0");
}

double controller_output(double e, double e_integral, double e_derivative, double theta,
                         double theta_dot, const PIDGains& gains) {
  return gains.Kp * e + gains.Ki * e_integral + gains.Kd * e_derivative +
         gains.u_f * sign(theta_dot) + gains.u_0 * std::sin(theta);
}

double available_torque(double theta_dot, const PhysicalParams& params) {
  return std::max(0.0, params.M_max - params.zeta() * std::abs(theta_dot));
}

double motor_saturate(double command, double theta_dot, const PhysicalParams& params) {
  const double limit = available_torque(theta_dot, params);
  return std::clamp(command, -limit, limit);
}

double contact_load(double theta, double theta_dot, double theta_ddot, const PhysicalParams& p) {
  const double ml = p.m * p.l;
  return (p.M + p.m) * p.g - ml * theta_ddot * std::sin(theta) -
         ml * theta_dot * theta_dot * std::cos(theta);
}

double horizontal_force(double theta, double theta_dot, double theta_ddot,
                        const PhysicalParams& p) {
  const double ml = p.m * p.l;
  return ml * theta_ddot * std::cos(theta) - ml * theta_dot * theta_dot * std::sin(theta);
}

FrictionResult friction_force(double x_dot, double R_y, double R_x, const PhysicalParams& p) {
  const double threshold = kStickVelocityThreshold * p.l * p.scaling().omega();
  FrictionResult out;
  out.contact_lost = R_y < 0.0;
  const double bound = p.mu * R_y;
  if (std::abs(x_dot) > threshold) {
    out.force = bound * sign(x_dot);
    out.mode = FrictionMode::slip;
  } else if (std::abs(R_x) >= bound) {
    out.force = bound * sign(R_x);
    out.mode = FrictionMode::slip;
  } else {
    out.force = R_x;
    out.mode = FrictionMode::stick;
  }
  return out;
}

namespace {

struct State {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
};

struct Rates {
  double x_ddot = 0.0;
  double theta_ddot = 0.0;
};

State offset(const State& s, const State& d, const Rates& r, double h) {
  return {s.x + h * d.x_dot, s.x_dot + h * r.x_ddot, s.theta + h * d.theta_dot,
          s.theta_dot + h * r.theta_ddot};
}

class Plant {
 public:
  Plant(const PhysicalParams& p, const TrackingOptions& o) : p_(p), o_(o) {}

  double torque(double command, double theta_dot) const {
    return o_.saturation ? motor_saturate(command, theta_dot, p_) : command;
  }

  double pendulum_load(const State& s, double torque) const {
    return p_.m * p_.g * p_.l * std::sin(s.theta) - p_.k_spring * s.theta -
           p_.c_damp * s.theta_dot + torque;
  }

  /// dir = 0: capsule held by friction.
  Rates rates(const State& s, double command, double dir) const {
    const double ml = p_.m * p_.l;
    const double load = pendulum_load(s, torque(command, s.theta_dot));
    if (dir == 0.0) return {0.0, load / (ml * p_.l)};
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    const double w2 = s.theta_dot * s.theta_dot;
    const double a11 = p_.M + p_.m;
    const double a12 = -ml * c - p_.mu * dir * ml * sn;
    const double b1 = -ml * w2 * sn - p_.mu * dir * ((p_.M + p_.m) * p_.g - ml * w2 * c);
    const double a21 = o_.pendulum_coupling ? -ml * c : 0.0;
    const double a22 = ml * p_.l;
    const double det = a11 * a22 - a12 * a21;
    return {(b1 * a22 - a12 * load) / det, (a11 * load - a21 * b1) / det};
  }

  /// Friction direction for the coming step (0 = stick).
  double slip_direction(const State& s, double command) const {
    const double threshold = kStickVelocityThreshold * p_.l * p_.scaling().omega();
    if (std::abs(s.x_dot) > threshold) return sign(s.x_dot);
    const Rates held = rates(s, command, 0.0);
    const double R_x = horizontal_force(s.theta, s.theta_dot, held.theta_ddot, p_);
    const double R_y = contact_load(s.theta, s.theta_dot, held.theta_ddot, p_);
    return friction_force(0.0, R_y, R_x, p_).mode == FrictionMode::stick ? 0.0 : sign(R_x);
  }

  State step(const State& s, double command, double h) const {
    const double dir = slip_direction(s, command);
    const Rates k1 = rates(s, command, dir);
    const State s2 = offset(s, s, k1, 0.5 * h);
    const Rates k2 = rates(s2, command, dir);
    const State s3 = offset(s, s2, k2, 0.5 * h);
    const Rates k3 = rates(s3, command, dir);
    const State s4 = offset(s, s3, k3, h);
    const Rates k4 = rates(s4, command, dir);
    State n;
    n.x = s.x + h / 6.0 * (s.x_dot + 2.0 * s2.x_dot + 2.0 * s3.x_dot + s4.x_dot);
    n.x_dot = s.x_dot + h / 6.0 * (k1.x_ddot + 2.0 * k2.x_ddot + 2.0 * k3.x_ddot + k4.x_ddot);
    n.theta = s.theta + h / 6.0 * (s.theta_dot + 2.0 * s2.theta_dot + 2.0 * s3.theta_dot +
                                   s4.theta_dot);
    n.theta_dot = s.theta_dot + h / 6.0 * (k1.theta_ddot + 2.0 * k2.theta_ddot +
                                           2.0 * k3.theta_ddot + k4.theta_ddot);
    if (dir == 0.0) {
      n.x = s.x;
      n.x_dot = 0.0;
    } else if (dir * n.x_dot < 0.0) {
      const double lambda = s.x_dot / (s.x_dot - n.x_dot);
      n.x = s.x + 0.5 * s.x_dot * lambda * h;
      n.x_dot = 0.0;
    }
    return n;
  }

 private:
  const PhysicalParams& p_;
  const TrackingOptions& o_;
};

/// Reference angle and its time derivatives in physical time.
struct Reference {
  const ControlLaw& law;
  double Omega;
  PendulumSample at(double t) const {
    const PendulumSample s = law.sample(Omega * t);
    return {s.theta, Omega * s.theta_dot, Omega * Omega * s.theta_ddot};
  }
};

/// Capsule driven by the exact reference motion (dimensional form of the
/// open-loop simulator).
State ideal_step(const State& s, const Reference& ref, double t, double h,
                 const PhysicalParams& p) {
  const PendulumSample a = ref.at(t);
  const PendulumSample mid = ref.at(t + 0.5 * h);
  const PendulumSample b = ref.at(t + h);
  const double threshold = kStickVelocityThreshold * p.l * p.scaling().omega();
  double v = s.x_dot;
  double dir = sign(v);
  State n{s.x, 0.0, b.theta, b.theta_dot};
  if (std::abs(v) <= threshold) {
    const double R_x = horizontal_force(a.theta, a.theta_dot, a.theta_ddot, p);
    const double R_y = contact_load(a.theta, a.theta_dot, a.theta_ddot, p);
    if (friction_force(0.0, R_y, R_x, p).mode == FrictionMode::stick || R_x == 0.0) return n;
    dir = sign(R_x);
    if (sign(v) != dir) v = 0.0;
  }
  auto accel = [&](const PendulumSample& q) {
    const double R_x = horizontal_force(q.theta, q.theta_dot, q.theta_ddot, p);
    const double R_y = contact_load(q.theta, q.theta_dot, q.theta_ddot, p);
    return (R_x - p.mu * R_y * dir) / (p.M + p.m);
  };
  const double a0 = accel(a);
  const double am = accel(mid);
  const double a1 = accel(b);
  double v1 = v + h / 6.0 * (a0 + 4.0 * am + a1);
  double x1 = s.x + h * v + h * h / 6.0 * (a0 + 2.0 * am);
  if (dir * v1 < 0.0) {
    const double lambda = v / (v - v1);
    x1 = s.x + 0.5 * v * lambda * h;
    v1 = 0.0;
  }
  n.x = x1;
  n.x_dot = v1;
  return n;
}

double required_torque(const PendulumSample& q, double x_ddot, const PhysicalParams& p) {
  const double ml = p.m * p.l;
  return ml * p.l * q.theta_ddot - ml * x_ddot * std::cos(q.theta) -
         p.m * p.g * p.l * std::sin(q.theta) + p.k_spring * q.theta + p.c_damp * q.theta_dot;
}

std::string describe(const PIDGains& g, double t) {
  return "t=" + std::to_string(t) + " s (Kp=" + std::to_string(g.Kp) +
         ", Ki=" + std::to_string(g.Ki) + ", Kd=" + std::to_string(g.Kd) + ")";
}

}  // namespace

TrackingResult track_simulate(const ControlLaw& reference, const PhysicalParams& params,
                              const PIDGains& gains, double duration,
                              const TrackingOptions& options) {
  validate(params);
  validate(gains);
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ConfigError("tracking.duration", "must be > 0");
  if (!(options.physics_step > 0.0)) throw ConfigError("tracking.physics_step", "must be > 0");
  if (!(options.derivative_filter_periods >= 0.0))
    throw ConfigError("tracking.derivative_filter_periods", "must be >= 0");

  const double h = options.physics_step;
  const double Omega = params.scaling().omega();
  const Reference ref{reference, Omega};
  const std::size_t steps =
      static_cast<std::size_t>(std::max(1.0, std::round(duration / h)));
  const double control_period = 1.0 / gains.loop_rate;
  const std::size_t per_tick =
      static_cast<std::size_t>(std::max(1.0, std::round(control_period / h)));
  const double Tc = static_cast<double>(per_tick) * h;
  const double filter_alpha = Tc / (options.derivative_filter_periods * Tc + Tc);
  const double quantum = 2.0 * std::numbers::pi / std::ldexp(1.0, options.encoder_bits);
  const std::size_t stride = std::max<std::size_t>(1, options.record_stride);

  TrackingResult out;
  out.period = reference.period() / Omega;
  out.duration = static_cast<double>(steps) * h;
  const std::size_t whole_periods =
      static_cast<std::size_t>(std::floor(out.duration / out.period + 1e-9));
  std::vector<double> period_sum(whole_periods, 0.0);
  std::vector<std::size_t> period_count(whole_periods, 0);
  double total_sum = 0.0;

  const Plant plant(params, options);
  State s;
  const PendulumSample start = ref.at(0.0);
  s.theta = start.theta;
  s.theta_dot = start.theta_dot;

  double command = 0.0;
  double integral = 0.0;
  double velocity_estimate = 0.0;
  double error_rate = 0.0;
  double last_measured = 0.0;
  double last_error = 0.0;
  bool first_tick = true;

  auto record = [&](double t, double theta_ref, double torque) {
    out.samples.push_back({t, theta_ref, s.theta, s.x, s.x_dot, torque});
  };

  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * h;
    const PendulumSample r = ref.at(t);

    if (i < steps) {
      const double sq = (s.theta - r.theta) * (s.theta - r.theta);
      total_sum += sq;
      const auto k = static_cast<std::size_t>(t / out.period);
      if (k < whole_periods) {
        period_sum[k] += sq;
        ++period_count[k];
      }
    }

    double torque = 0.0;
    if (options.ideal_tracking) {
      const State next = i < steps ? ideal_step(s, ref, t, h, params) : s;
      const double x_ddot = i < steps ? (next.x_dot - s.x_dot) / h : 0.0;
      torque = required_torque(r, x_ddot, params);
      if (i % stride == 0 || i == steps) record(t, r.theta, torque);
      if (i == steps) break;
      s = next;
    } else {
      if (i % per_tick == 0 && i < steps) {
        double measured = s.theta;
        if (options.quantize_encoder) measured = std::round(measured / quantum) * quantum;
        const double e = r.theta - measured;
        if (first_tick) {
          last_measured = measured;
          last_error = e;
          first_tick = false;
        }
        velocity_estimate += filter_alpha * ((measured - last_measured) / Tc - velocity_estimate);
        error_rate += filter_alpha * ((e - last_error) / Tc - error_rate);
        last_measured = measured;
        last_error = e;
        const double d_term = options.derivative == DerivativeSource::measurement
                                  ? -velocity_estimate
                                  : error_rate;
        const double candidate = integral + e * Tc;
        command = controller_output(e, candidate, d_term, measured, velocity_estimate, gains);
        const bool clamped =
            options.saturation && std::abs(command) > available_torque(s.theta_dot, params);
        if (clamped)
          command = controller_output(e, integral, d_term, measured, velocity_estimate, gains);
        else
          integral = candidate;
      }
      torque = plant.torque(command, s.theta_dot);
      if (options.saturation) {
        const double avail = available_torque(s.theta_dot, params);
        if (avail > 0.0)
          out.max_torque_ratio = std::max(out.max_torque_ratio, std::abs(torque) / avail);
        else if (torque != 0.0)
          out.max_torque_ratio = INFINITY;
      }
      if (i % stride == 0 || i == steps) record(t, r.theta, torque);
      if (i == steps) break;
      s = plant.step(s, command, h);
    }

    if (!std::isfinite(s.x) || !std::isfinite(s.x_dot) || !std::isfinite(s.theta) ||
        !std::isfinite(s.theta_dot) || std::abs(s.theta) > 1e3)
      throw TrackingDiverged(describe(gains, t + h));
  }

  out.rmse_full = std::sqrt(total_sum / static_cast<double>(steps));
  for (std::size_t k = 0; k < whole_periods; ++k)
    out.rmse_per_period.push_back(
        period_count[k] ? std::sqrt(period_sum[k] / static_cast<double>(period_count[k])) : 0.0);
  return out;
}

}  // namespace pcd
