#pragma once

// Dimensionless pendulum-capsule dynamics: contact load, horizontal pendulum
// force, Coulomb stick-slip friction and the resulting capsule acceleration.

#include <cmath>

namespace pcd {

/// Mass ratio gamma = M/m and the (single) Coulomb friction coefficient.
struct SystemParams {
  double gamma = 14.5;
  double mu = 0.17;
};

void validate(const SystemParams& params);

/// Pendulum angle and its first two derivatives w.r.t. dimensionless time.
struct PendulumSample {
  double theta = 0.0;
  double theta_dot = 0.0;
  double theta_ddot = 0.0;
};

/// Conversion between physical and dimensionless quantities.
///
/// Omega = sqrt(g / l), tau = Omega t, z = x / l; forces are scaled by
/// m Omega^2 l (= m g).
struct ScalingContext {
  double l = 0.1;
  double m = 0.04;
  double g = 9.81;

  double omega() const { return std::sqrt(g / l); }
  double force_scale() const { return m * omega() * omega() * l; }

  double to_tau(double t) const { return omega() * t; }
  double to_seconds(double tau) const { return tau / omega(); }
  double to_metres(double z) const { return z * l; }
  double to_z(double x) const { return x / l; }
  /// d/dt -> d/dtau
  double rate_to_dimensionless(double xdot) const { return xdot / omega(); }
  double accel_to_dimensionless(double xddot) const { return xddot / (omega() * omega()); }
};

void validate(const ScalingContext& scaling);

enum class FrictionMode { stick, slip };

const char* to_string(FrictionMode mode);

/// Velocity magnitude below which the capsule counts as resting (z' = 0 branch).
inline constexpr double kStickVelocityThreshold = 1e-8;

struct FrictionResult {
  double force = 0.0;
  FrictionMode mode = FrictionMode::stick;
  /// r_y < 0: the capsule would leave the ground.
  bool contact_lost = false;
};

/// r_y = (gamma + 1) - theta'' sin(theta) - theta'^2 cos(theta)
double contact_load(const PendulumSample& s, const SystemParams& params);

/// r_z = theta'' cos(theta) - theta'^2 sin(theta)
double horizontal_force(const PendulumSample& s);

/// Coulomb law with a stick branch. Slip when |z'| > threshold or when the
/// pendulum force reaches the friction bound (breakaway); otherwise friction
/// balances r_z exactly.
FrictionResult friction_force(double z_dot, double r_y, double r_z, const SystemParams& params);

/// z'' = (r_z - f_z) / (gamma + 1); exactly zero when f_z == r_z.
double capsule_accel(const PendulumSample& s, double f_z, const SystemParams& params);

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace pcd
