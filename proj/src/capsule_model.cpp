#include "pcd/capsule_model.hpp"

#include "pcd/error.hpp"

namespace pcd {

void validate(const SystemParams& params) {
  if (!(params.gamma > 0.0)) throw ConfigError("system.gamma", "must be > 0");
  if (!(params.mu >= 0.0)) throw ConfigError("system.mu", "must be >= 0");
}

void validate(const ScalingContext& scaling) {
  if (!(scaling.l > 0.0)) throw ConfigError("scaling.l", "must be > 0");
  if (!(scaling.m > 0.0)) throw ConfigError("scaling.m", "must be > 0");
  if (!(scaling.g > 0.0)) throw ConfigError("scaling.g", "must be > 0");
}

const char* to_string(FrictionMode mode) {
  return mode == FrictionMode::stick ? "stick" : "slip";
}

double contact_load(const PendulumSample& s, const SystemParams& params) {
  return (params.gamma + 1.0) - s.theta_ddot * std::sin(s.theta) -
         s.theta_dot * s.theta_dot * std::cos(s.theta);
}

double horizontal_force(const PendulumSample& s) {
  return s.theta_ddot * std::cos(s.theta) - s.theta_dot * s.theta_dot * std::sin(s.theta);
}

FrictionResult friction_force(double z_dot, double r_y, double r_z, const SystemParams& params) {
  FrictionResult out;
  out.contact_lost = r_y < 0.0;
  const double bound = params.mu * r_y;
  if (std::abs(z_dot) > kStickVelocityThreshold) {
    out.force = bound * sign(z_dot);
    out.mode = FrictionMode::slip;
  } else if (std::abs(r_z) >= bound) {
    out.force = bound * sign(r_z);
    out.mode = FrictionMode::slip;
  } else {
    out.force = r_z;
    out.mode = FrictionMode::stick;
  }
  return out;
}

double capsule_accel(const PendulumSample& s, double f_z, const SystemParams& params) {
  return (horizontal_force(s) - f_z) / (params.gamma + 1.0);
}

}  // namespace pcd
