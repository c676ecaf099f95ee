#include "pcd/config.hpp"

#include <fstream>
#include <set>

#include "pcd/error.hpp"

namespace pcd {

ProblemSetup RunConfig::setup() const {
  ProblemSetup s;
  s.system = system;
  s.limits = limits;
  s.bounds = bounds;
  s.step = step;
  s.zero_start = zero_start;
  s.zero_drift = zero_drift;
  return s;
}

void validate(const RunConfig& c) {
  validate(c.system);
  validate(c.limits);
  validate(c.scaling);
  validate(c.plan);
  validate(c.physical);
  validate(c.gains);
  if (!(c.bounds.u_min < c.bounds.u_max)) throw ConfigError("control.u_min", "must be < u_max");
  if (c.zero_drift && !(c.bounds.u_min < 0.0 && c.bounds.u_max > 0.0))
    throw ConfigError("control.zero_drift", "needs u_min < 0 < u_max");
  if (c.de.population_size != 0 && c.de.population_size < 4)
    throw ConfigError("de.population_size", "must be 0 (auto) or >= 4");
  validate(c.de, 1);
  if (!(c.step > 0.0)) throw ConfigError("simulation.step", "must be > 0");
  if (c.trajectory_stride < 1) throw ConfigError("simulation.trajectory_stride", "must be >= 1");
  if (!(c.tracking.physics_step > 0.0))
    throw ConfigError("tracking.options.physics_step", "must be > 0");
  if (!(c.tracking.derivative_filter_periods >= 0.0))
    throw ConfigError("tracking.options.derivative_filter_periods", "must be >= 0");
  if (c.tracking.encoder_bits < 1 || c.tracking.encoder_bits > 30)
    throw ConfigError("tracking.options.encoder_bits", "must be in [1, 30]");
  if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

Json to_json(const RunConfig& c) {
  Json stages = Json::array();
  for (const Stage& s : c.plan.stages)
    stages.push_back({{"k", s.harmonics}, {"omega", s.omega}, {"periods", s.validation_periods}});
  const TrackingOptions& o = c.tracking;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"seed", c.de.seed},
      {"system", {{"gamma", c.system.gamma}, {"mu", c.system.mu}}},
      {"limits",
       {{"theta_min", c.limits.theta_min},
        {"theta_max", c.limits.theta_max},
        {"speed_max", c.limits.speed_max},
        {"u_max_torque", c.limits.u_max_torque},
        {"kappa", c.limits.kappa},
        {"torque_margin", c.limits.torque_margin}}},
      {"control",
       {{"u_min", c.bounds.u_min},
        {"u_max", c.bounds.u_max},
        {"zero_start", c.zero_start},
        {"zero_drift", c.zero_drift}}},
      {"scaling", {{"l", c.scaling.l}, {"m", c.scaling.m}, {"g", c.scaling.g}}},
      {"stages", stages},
      {"cost_horizon",
       c.plan.cost_horizon == CostHorizon::one_period ? "one_period" : "full_horizon"},
      {"de",
       {{"population_size", c.de.population_size},
        {"mutation", c.de.mutation},
        {"crossover", c.de.crossover},
        {"generations", c.de.generations},
        {"penalty", c.de.penalty}}},
      {"simulation", {{"step", c.step}, {"trajectory_stride", c.trajectory_stride}}},
      {"tracking",
       {{"physical",
         {{"M", c.physical.M},
          {"m", c.physical.m},
          {"l", c.physical.l},
          {"g", c.physical.g},
          {"k_spring", c.physical.k_spring},
          {"c_damp", c.physical.c_damp},
          {"mu", c.physical.mu},
          {"M_max", c.physical.M_max},
          {"omega_max", c.physical.omega_max}}},
        {"gains",
         {{"Kp", c.gains.Kp},
          {"Ki", c.gains.Ki},
          {"Kd", c.gains.Kd},
          {"u_f", c.gains.u_f},
          {"u_0", c.gains.u_0},
          {"loop_rate", c.gains.loop_rate}}},
        {"options",
         {{"physics_step", o.physics_step},
          {"derivative", o.derivative == DerivativeSource::error ? "error" : "measurement"},
          {"derivative_filter_periods", o.derivative_filter_periods},
          {"quantize_encoder", o.quantize_encoder},
          {"encoder_bits", o.encoder_bits},
          {"pendulum_coupling", o.pendulum_coupling},
          {"saturation", o.saturation},
          {"record_stride", o.record_stride}}}}},
      {"output_dir", c.output_dir},
  };
}

namespace {

// Reads the members of one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  void number(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }

  template <class Unsigned>
  void count(const char* key, Unsigned& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(field(key), "expected a non-negative integer");
      out = static_cast<Unsigned>(v->get<unsigned long long>());
    }
  }

  void flag(const char* key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const char* key, std::string& out) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  const Json* take(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig run_config_from_json(const Json& input) {
  const Json& j = (input.is_object() && input.contains("config") && !input.contains("schema_version"))
                      ? input.at("config")
                      : input;
  RunConfig c;
  Section root(j, "");
  int version = kConfigSchemaVersion;
  root.integer("schema_version", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  root.count("seed", c.de.seed);

  if (const Json* s = root.take("system")) {
    Section sec(*s, "system");
    sec.number("gamma", c.system.gamma);
    sec.number("mu", c.system.mu);
    sec.finish();
  }
  if (const Json* s = root.take("limits")) {
    Section sec(*s, "limits");
    sec.number("theta_min", c.limits.theta_min);
    sec.number("theta_max", c.limits.theta_max);
    sec.number("speed_max", c.limits.speed_max);
    sec.number("u_max_torque", c.limits.u_max_torque);
    sec.number("kappa", c.limits.kappa);
    sec.number("torque_margin", c.limits.torque_margin);
    sec.finish();
  }
  if (const Json* s = root.take("control")) {
    Section sec(*s, "control");
    sec.number("u_min", c.bounds.u_min);
    sec.number("u_max", c.bounds.u_max);
    sec.flag("zero_start", c.zero_start);
    sec.flag("zero_drift", c.zero_drift);
    sec.finish();
  }
  if (const Json* s = root.take("scaling")) {
    Section sec(*s, "scaling");
    sec.number("l", c.scaling.l);
    sec.number("m", c.scaling.m);
    sec.number("g", c.scaling.g);
    sec.finish();
  }
  if (const Json* s = root.take("stages")) {
    if (!s->is_array()) throw ConfigError("stages", "expected an array");
    c.plan.stages.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      Section sec((*s)[i], "stages[" + std::to_string(i) + "]");
      Stage st;
      sec.integer("k", st.harmonics);
      sec.number("omega", st.omega);
      sec.integer("periods", st.validation_periods);
      sec.finish();
      c.plan.stages.push_back(st);
    }
  }
  std::string horizon = "one_period";
  root.text("cost_horizon", horizon);
  if (horizon == "one_period")
    c.plan.cost_horizon = CostHorizon::one_period;
  else if (horizon == "full_horizon")
    c.plan.cost_horizon = CostHorizon::full_horizon;
  else
    throw ConfigError("cost_horizon", "expected one_period or full_horizon");

  if (const Json* s = root.take("de")) {
    Section sec(*s, "de");
    sec.count("population_size", c.de.population_size);
    sec.number("mutation", c.de.mutation);
    sec.number("crossover", c.de.crossover);
    sec.count("generations", c.de.generations);
    sec.number("penalty", c.de.penalty);
    sec.finish();
  }
  if (const Json* s = root.take("simulation")) {
    Section sec(*s, "simulation");
    sec.number("step", c.step);
    sec.count("trajectory_stride", c.trajectory_stride);
    sec.finish();
  }
  if (const Json* s = root.take("tracking")) {
    Section sec(*s, "tracking");
    if (const Json* p = sec.take("physical")) {
      Section ps(*p, "tracking.physical");
      ps.number("M", c.physical.M);
      ps.number("m", c.physical.m);
      ps.number("l", c.physical.l);
      ps.number("g", c.physical.g);
      ps.number("k_spring", c.physical.k_spring);
      ps.number("c_damp", c.physical.c_damp);
      ps.number("mu", c.physical.mu);
      ps.number("M_max", c.physical.M_max);
      ps.number("omega_max", c.physical.omega_max);
      ps.finish();
    }
    if (const Json* g = sec.take("gains")) {
      Section gs(*g, "tracking.gains");
      gs.number("Kp", c.gains.Kp);
      gs.number("Ki", c.gains.Ki);
      gs.number("Kd", c.gains.Kd);
      gs.number("u_f", c.gains.u_f);
      gs.number("u_0", c.gains.u_0);
      gs.number("loop_rate", c.gains.loop_rate);
      gs.finish();
    }
    if (const Json* o = sec.take("options")) {
      Section os(*o, "tracking.options");
      TrackingOptions& t = c.tracking;
      os.number("physics_step", t.physics_step);
      std::string derivative = t.derivative == DerivativeSource::error ? "error" : "measurement";
      os.text("derivative", derivative);
      if (derivative == "error")
        t.derivative = DerivativeSource::error;
      else if (derivative == "measurement")
        t.derivative = DerivativeSource::measurement;
      else
        throw ConfigError("tracking.options.derivative", "expected error or measurement");
      os.number("derivative_filter_periods", t.derivative_filter_periods);
      os.flag("quantize_encoder", t.quantize_encoder);
      os.integer("encoder_bits", t.encoder_bits);
      os.flag("pendulum_coupling", t.pendulum_coupling);
      os.flag("saturation", t.saturation);
      os.count("record_stride", t.record_stride);
      os.finish();
    }
    sec.finish();
  }
  root.text("output_dir", c.output_dir);
  root.finish();
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

void set_horizon_periods(StagePlan& plan, int periods) {
  if (periods < 1) throw ConfigError("horizon_periods", "must be >= 1");
  int per_stage = periods;
  for (std::size_t n = 0; n < plan.stages.size(); ++n) {
    if (n > 0) {
      if (per_stage % 2 != 0)
        throw ConfigError("horizon_periods",
                          "must be divisible by 2^(stages-1) = " +
                              std::to_string(1 << (plan.stages.size() - 1)));
      per_stage /= 2;
    }
    plan.stages[n].validation_periods = per_stage;
  }
}

}  // namespace pcd
