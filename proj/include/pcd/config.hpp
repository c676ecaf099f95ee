#pragma once

// Run configuration: one versioned JSON document covering every module.

#include <string>

#include "pcd/serialization.hpp"

namespace pcd {

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  SystemParams system;
  ActuatorLimits limits;
  ControlBounds bounds;
  bool zero_start = true;
  bool zero_drift = true;
  ScalingContext scaling;
  StagePlan plan = default_plan();
  DEConfig de;
  double step = 1e-3;
  /// Trajectory CSVs keep every n-th step.
  std::size_t trajectory_stride = 10;
  PhysicalParams physical;
  PIDGains gains;
  TrackingOptions tracking;
  std::string output_dir = "out";

  ProblemSetup setup() const;
};

/// Field-level ConfigError on any invalid value.
void validate(const RunConfig& config);

Json to_json(const RunConfig& config);

/// Missing keys keep their defaults; unknown keys are rejected. A run
/// manifest (an object with a "config" member) is accepted as well.
RunConfig run_config_from_json(const Json& j);

RunConfig load_run_config(const std::string& path);

/// Validation horizon of `periods` stage-1 periods, spread over the plan:
/// stage n gets periods / 2^(n-1) of its own periods.
void set_horizon_periods(StagePlan& plan, int periods);

}  // namespace pcd
