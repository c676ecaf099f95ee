#include "pcd/serialization.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "pcd/error.hpp"

namespace pcd {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

const Json& member(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing");
  return *it;
}

double number(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers(const Json& j, const char* key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_array()) throw ConfigError(path + "." + key, "expected an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(path + "." + key, "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

bool boolean(const Json& j, const char* key, const std::string& path, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(path + "." + key, "expected true or false");
  return it->get<bool>();
}

}  // namespace

Json to_json(const ControlParams& p) {
  return {
      {"basis", {{"K", p.basis.harmonics}, {"omega", p.basis.omega}, {"period", p.basis.period()}}},
      {"shape", {{"phi", p.shape.phi}}},
      {"span", {{"p", p.span.p}, {"q", p.span.q}}},
      {"bounds", {{"u_min", p.bounds.u_min}, {"u_max", p.bounds.u_max}}},
      {"zero_start", p.zero_start},
      {"zero_drift", p.zero_drift},
  };
}

ControlParams control_params_from_json(const Json& j) {
  ControlParams p;
  const Json& basis = member(j, "basis", "params");
  const Json& k = member(basis, "K", "params.basis");
  if (!k.is_number_integer()) throw ConfigError("params.basis.K", "expected an integer");
  p.basis.harmonics = k.get<int>();
  p.basis.omega = number(basis, "omega", "params.basis");
  p.shape.phi = numbers(member(j, "shape", "params"), "phi", "params.shape");
  const Json& span = member(j, "span", "params");
  p.span.p = number(span, "p", "params.span");
  p.span.q = number(span, "q", "params.span");
  const Json& bounds = member(j, "bounds", "params");
  p.bounds.u_min = number(bounds, "u_min", "params.bounds");
  p.bounds.u_max = number(bounds, "u_max", "params.bounds");
  p.zero_start = boolean(j, "zero_start", "params", false);
  p.zero_drift = boolean(j, "zero_drift", "params", false);
  validate(p);
  return p;
}

Json to_json(const ControlLaw& law) {
  const FourierCoefficients& c = law.coefficients();
  const auto freq = law.frequencies();
  std::vector<double> angle_sin, angle_cos, accel_cos, accel_sin;
  for (std::size_t j = 0; j < c.a.size(); ++j) {
    angle_sin.push_back(c.a[j] / freq[j]);
    angle_cos.push_back(-c.b[j] / freq[j]);
    accel_cos.push_back(freq[j] * c.b[j]);
    accel_sin.push_back(-freq[j] * c.a[j]);
  }
  return {
      {"omega", c.omega},
      {"period", law.period()},
      {"a0", c.a0},
      {"a", c.a},
      {"b", c.b},
      {"angle",
       {{"drift_rate", 0.5 * c.a0},
        {"offset", law.angle_offset()},
        {"sin", angle_sin},
        {"cos", angle_cos},
        {"per_period_drift", law.per_period_drift()}}},
      {"accel", {{"cos", accel_cos}, {"sin", accel_sin}}},
  };
}

ControlLaw control_law_from_json(const Json& j) {
  FourierCoefficients c;
  c.omega = number(j, "omega", "law");
  c.a0 = number(j, "a0", "law");
  c.a = numbers(j, "a", "law");
  c.b = numbers(j, "b", "law");
  return ControlLaw(std::move(c));
}

Json to_json(const ConstraintReport& r) {
  return {
      {"feasible", r.feasible},
      {"violation", r.violation()},
      {"max_angle_excess", r.max_angle_excess},
      {"max_speed_excess", r.max_speed_excess},
      {"max_torque_deficit", r.max_torque_deficit},
      {"max_leap_excess", r.max_leap_excess},
      {"min_contact_load", r.min_contact_load},
      {"theta_low", r.theta_low},
      {"theta_high", r.theta_high},
  };
}

Json to_json(const StageResult& s, const ScalingContext& scaling) {
  const double horizon = s.validation_horizon();
  return {
      {"k", s.harmonics},
      {"omega", s.omega},
      {"validation_periods", s.validation_periods},
      {"validation_horizon", horizon},
      {"seed", s.seed},
      {"evaluations", s.evaluations},
      {"best_cost", s.best_cost},
      {"distance", s.distance},
      {"distance_cm", 100.0 * scaling.to_metres(s.distance)},
      {"speed_cm_per_s", average_speed_cm_per_s(s.distance, horizon, scaling)},
      {"carried_over", s.carried_over},
      {"feasible", s.report.feasible},
      {"report", to_json(s.report)},
      {"params", to_json(s.best_params)},
      {"law", to_json(s.law)},
  };
}

Json tracking_summary(const TrackingResult& r) {
  return {
      {"rmse_full", r.rmse_full},
      {"rmse_per_period", r.rmse_per_period},
      {"period_s", r.period},
      {"duration_s", r.duration},
      {"max_torque_ratio", r.max_torque_ratio},
  };
}

namespace {

void row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : trajectory) {
    row(out, {r.tau, r.theta, r.theta_dot, r.theta_ddot, r.z, r.z_dot});
    out << ',' << to_string(r.mode) << ',';
    row(out, {r.r_y, r.r_z, r.f_z});
    out << '\n';
  }
}

void write_control_csv(std::ostream& out, const ControlLaw& law, double step) {
  out << kControlHeader << '\n';
  const std::size_t n = step_count(law.period(), step);
  for (std::size_t i = 0; i <= n; ++i) {
    const double tau = node_time(2 * i, step);
    const PendulumSample s = law.sample(tau);
    row(out, {tau, s.theta_dot, s.theta, s.theta_ddot});
    out << '\n';
  }
}

void write_tracking_csv(std::ostream& out, const TrackingResult& result) {
  out << kTrackingHeader << '\n';
  for (const auto& s : result.samples) {
    row(out, {s.t, s.theta_ref, s.theta, s.x, s.x_dot, s.torque});
    out << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DomainError("csv: missing column '" + name + "'");
}

std::vector<std::string> CsvTable::strings(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string& cell = rows[i][c];
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      throw DomainError("csv: row " + std::to_string(i + 1) + ", column '" + name +
                        "': not a number");
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  auto strip = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw DomainError("csv: empty input");
  strip(line);
  table.header = split(line);
  while (std::getline(in, line)) {
    strip(line);
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw DomainError("csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

FrictionMode friction_mode_from_string(const std::string& s) {
  if (s == "stick") return FrictionMode::stick;
  if (s == "slip") return FrictionMode::slip;
  throw DomainError("unknown friction mode '" + s + "'");
}

}  // namespace pcd
