#pragma once

// Closed-loop simulation of the physical prototype: the coupled capsule and
// pendulum equations driven by a PID controller with friction and gravity
// compensation, running at a fixed loop rate behind a DC motor torque limit.

#include <cstddef>
#include <numbers>
#include <vector>

#include "pcd/capsule_model.hpp"
#include "pcd/fourier_control.hpp"

namespace pcd {

struct PhysicalParams {
  double M = 0.58;
  double m = 0.04;
  double l = 0.1;
  double g = 9.81;
  double k_spring = 0.0;
  double c_damp = 0.0;
  double mu = 0.17;
  double M_max = 1.5;
  /// 330 rpm.
  double omega_max = 330.0 * 2.0 * std::numbers::pi / 60.0;

  double zeta() const { return M_max / omega_max; }
  ScalingContext scaling() const { return {l, m, g}; }
  SystemParams system() const { return {M / m, mu}; }
};

void validate(const PhysicalParams& params);

struct PIDGains {
  double Kp = 2.0;
  double Ki = 0.5;
  double Kd = 0.05;
  double u_f = 0.0;
  double u_0 = 0.0;
  double loop_rate = 100.0;
};

void validate(const PIDGains& gains);

enum class DerivativeSource { measurement, error };

struct TrackingOptions {
  double physics_step = 1e-4;
  DerivativeSource derivative = DerivativeSource::error;
  /// Time constant of the first-order derivative filter in control periods
  /// (0 = raw backward difference).
  double derivative_filter_periods = 0.0;
  bool quantize_encoder = false;
  int encoder_bits = 10;
  /// Keep the capsule acceleration term in the pendulum equation.
  bool pendulum_coupling = true;
  /// Impose theta = theta_ref exactly (no controller, no motor).
  bool ideal_tracking = false;
  bool saturation = true;
  std::size_t record_stride = 10;
};

struct TrackingSample {
  double t = 0.0;
  double theta_ref = 0.0;
  double theta = 0.0;
  double x = 0.0;
  double x_dot = 0.0;
  double torque = 0.0;
};

struct TrackingResult {
  std::vector<TrackingSample> samples;
  double rmse_full = 0.0;
  /// One value per whole reference period inside the run.
  std::vector<double> rmse_per_period;
  /// Reference period in seconds.
  double period = 0.0;
  double duration = 0.0;
  /// Largest |applied torque| / available torque seen (<= 1 with saturation).
  double max_torque_ratio = 0.0;
};

/// Kp e + Ki int(e) + Kd de/dt + u_f sgn(theta') + u_0 sin(theta)
double controller_output(double e, double e_integral, double e_derivative, double theta,
                         double theta_dot, const PIDGains& gains);

/// max(0, M_max - zeta |theta'|)
double available_torque(double theta_dot, const PhysicalParams& params);

/// Clamp |command| to the torque-speed line, keeping its sign.
double motor_saturate(double command, double theta_dot, const PhysicalParams& params);

/// R_y = (M + m) g - m l theta'' sin(theta) - m l theta'^2 cos(theta)
double contact_load(double theta, double theta_dot, double theta_ddot, const PhysicalParams& p);

/// R_x = m l theta'' cos(theta) - m l theta'^2 sin(theta)
double horizontal_force(double theta, double theta_dot, double theta_ddot,
                        const PhysicalParams& p);

/// Dimensional Coulomb law with the same stick threshold as the dimensionless
/// one (scaled to m/s).
FrictionResult friction_force(double x_dot, double R_y, double R_x, const PhysicalParams& p);

/// Track the angle of `reference` (a dimensionless law, evaluated at
/// tau = Omega t) for `duration` seconds starting from rest.
/// Throws TrackingDiverged when the state blows up.
TrackingResult track_simulate(const ControlLaw& reference, const PhysicalParams& params,
                              const PIDGains& gains, double duration,
                              const TrackingOptions& options = {});

}  // namespace pcd
