#pragma once

// JSON and CSV formats for control parameters, laws, stage results,
// trajectories and tracking runs.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcd/analysis.hpp"
#include "pcd/fourier_control.hpp"
#include "pcd/optimizer.hpp"
#include "pcd/simulator.hpp"
#include "pcd/tracking.hpp"

namespace pcd {

using Json = nlohmann::json;

/// Shortest text that reads back to the same double.
std::string format_double(double v);

Json to_json(const ControlParams& params);
ControlParams control_params_from_json(const Json& j);

/// Fourier coefficients of u plus the derived angle and acceleration series.
Json to_json(const ControlLaw& law);
ControlLaw control_law_from_json(const Json& j);

Json to_json(const ConstraintReport& report);

Json to_json(const StageResult& stage, const ScalingContext& scaling);

Json tracking_summary(const TrackingResult& result);

inline constexpr const char* kTrajectoryHeader = "tau,theta,theta_dot,theta_ddot,z,z_dot,mode,r_y,r_z,f_z";
inline constexpr const char* kControlHeader = "tau,u,theta,theta_ddot";
inline constexpr const char* kTrackingHeader = "t,theta_ref,theta,x,x_dot,torque";

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
/// One period of the law sampled every `step`.
void write_control_csv(std::ostream& out, const ControlLaw& law, double step);
void write_tracking_csv(std::ostream& out, const TrackingResult& result);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws DomainError when missing.
  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
  std::vector<std::string> strings(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

FrictionMode friction_mode_from_string(const std::string& s);

}  // namespace pcd
