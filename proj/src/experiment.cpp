#include "indexone/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace indexone {

using nlohmann::json;

namespace {

struct Preset {
  const char* name;
  const char* description;
  const char* body;
};

// Embedded so that the reference experiments do not depend on files on disk.
const Preset kPresets[] = {
    {"heisenberg-geodesic", "Heisenberg geodesic from (0,0,0; 0.1,0.3,0), midpoint, dt=0.01 to t=5",
     R"({"experiment": "heisenberg-geodesic", "problem": "heisenberg", "initial_state": "geodesic",
         "tableau": "midpoint", "dt": 0.01, "t_end": 5.0,
         "symplecticity": true, "symplecticity_steps": 10})"},
    {"heisenberg-converge-midpoint", "Convergence of the midpoint rule on the Heisenberg problem, t=1",
     R"({"experiment": "heisenberg-converge-midpoint", "problem": "heisenberg", "initial_state": "geodesic",
         "tableau": "midpoint", "dt": 0.01, "t_end": 1.0, "convergence": true,
         "dts": [0.08, 0.04, 0.02, 0.01], "reference_dt": 0.0005})"},
    {"heisenberg-converge-gauss2", "Convergence of 2-stage Gauss on the Heisenberg problem, t=1",
     R"({"experiment": "heisenberg-converge-gauss2", "problem": "heisenberg", "initial_state": "geodesic",
         "tableau": "gauss2", "dt": 0.01, "t_end": 1.0, "convergence": true,
         "dts": [0.08, 0.04, 0.02, 0.01], "reference_dt": 0.0005})"},
    {"vehicle-bowl-energy", "Vehicle in the cosine bowl, midpoint, dt=0.1, 10^4 steps; energy error series",
     R"({"experiment": "vehicle-bowl-energy", "problem": "vehicle", "potential": "cosine-bowl",
         "initial_state": "bowl", "tableau": "midpoint", "dt": 0.1, "t_end": 1000.0,
         "symplecticity": true, "symplecticity_steps": 10})"},
    {"vehicle-straight", "Straight-line relative equilibrium of the free vehicle, 100 midpoint steps",
     R"({"experiment": "vehicle-straight", "problem": "vehicle", "initial_state": "straight",
         "tableau": "midpoint", "dt": 0.1, "t_end": 10.0})"},
    {"vehicle-circle", "Circular relative equilibrium (a=1, L=0.3), midpoint, dt=0.1, three revolutions",
     R"({"experiment": "vehicle-circle", "problem": "vehicle", "initial_state": "circular", "rate": 1.0,
         "L": 0.3, "tableau": "midpoint", "dt": 0.1, "t_end": 18.84955592153876})"},
    {"vehicle-check", "Vehicle in the cosine bowl, 10 midpoint steps; symplecticity and constraint checks",
     R"({"experiment": "vehicle-check", "problem": "vehicle", "potential": "cosine-bowl",
         "initial_state": "bowl", "tableau": "midpoint", "dt": 0.05, "t_end": 0.5,
         "symplecticity": true, "symplecticity_steps": 10})"},
    {"circle-rattle", "Particle on a circle under gravity, RATTLE with midpoint inner step",
     R"({"experiment": "circle-rattle", "problem": "circle", "tableau": "rattle-midpoint",
         "dt": 0.05, "t_end": 10.0, "rate": 1.0})"},
    {"vehicle-rattle", "Vehicle with the steering locked at pi/2 in the cosine bowl, RATTLE",
     R"({"experiment": "vehicle-rattle", "problem": "vehicle", "potential": "cosine-bowl",
         "lock_steering": true, "initial_state": "locked", "tableau": "rattle-midpoint",
         "dt": 0.05, "t_end": 10.0})"},
};

const Preset* find_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return &p;
  }
  return nullptr;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

double get_number(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number", key);
  return v.get<double>();
}

int get_int(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer()) throw ConfigError("field '" + key + "' must be an integer", key);
  return v.get<int>();
}

bool get_bool(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_boolean()) throw ConfigError("field '" + key + "' must be true or false", key);
  return v.get<bool>();
}

std::string get_string(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_string()) throw ConfigError("field '" + key + "' must be a string", key);
  return v.get<std::string>();
}

std::vector<double> get_vector(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_array()) throw ConfigError("field '" + key + "' must be an array of numbers", key);
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("field '" + key + "' must be an array of numbers", key);
    out.push_back(x.get<double>());
  }
  return out;
}

Matrix get_matrix(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError("field '" + key + "' must be a square array of rows", key);
  const auto s = static_cast<Eigen::Index>(v.size());
  Matrix m(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != s) {
      throw ConfigError("field '" + key + "' must be a square array of rows", key);
    }
    for (Eigen::Index j = 0; j < s; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number()) throw ConfigError("field '" + key + "' has a non-number", key);
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json state_json(const NamedState& s) {
  return json{{"label", s.label},
              {"q", to_json(s.state.q)},
              {"p", to_json(s.state.p)},
              {"lambda", to_json(s.state.lambda)},
              {"lambda_h", to_json(s.state.lambda_h)}};
}

std::string method_name(const ExperimentConfig& config) {
  if (config.tableau == "custom" && config.custom_tableau) return config.custom_tableau->name;
  return config.tableau;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << contents;
  os.flush();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

json base_report(const ExperimentConfig& config, const ProblemInstance& problem, const NamedState& init) {
  json r;
  r["experiment"] = config.experiment;
  r["problem"] = problem.name;
  r["tableau"] = method_name(config);
  r["dt"] = config.solver.dt;
  r["t_end"] = config.t_end;
  r["initial_state"] = state_json(init);
  return r;
}

double tableau_residual(const ExperimentConfig& config) {
  if (config.tableau == "custom") return symplecticity_residual(*config.custom_tableau);
  if (config.tableau == "rattle-midpoint") return symplecticity_residual(gauss_tableau(1));
  return symplecticity_residual(tableau_by_name(config.tableau));
}

json energy_json(const std::vector<double>& series) {
  const EnergySummary e = summarize_energy(series);
  return json{{"max_abs", e.max_abs},
              {"first_half_max", e.first_half_max},
              {"second_half_max", e.second_half_max},
              {"bounded", e.bounded},
              {"series", series}};
}

json audit_json(const ConstraintAudit& a, int l) {
  json c{{"endpoint_max", a.endpoint_max}, {"stage_max", a.stage_max}};
  if (l > 0) {
    c["holonomic_max"] = a.holonomic_max;
    c["hidden_max"] = a.hidden_max;
  }
  return c;
}

json convergence_json(const ConvergenceReport& c) {
  json errors = json::array();
  for (double e : c.errors) {
    if (std::isfinite(e)) {
      errors.push_back(e);
    } else {
      errors.push_back(nullptr);
    }
  }
  json out{{"dts", c.dts},
           {"effective_dts", c.effective_dts},
           {"errors", errors},
           {"reference_dt", c.reference_dt},
           {"reference_method", c.reference_method},
           {"failures", c.failures}};
  if (std::isfinite(c.order)) {
    out["order"] = c.order;
  } else {
    out["order"] = nullptr;
  }
  return out;
}

ConvergenceReport run_convergence(const ExperimentConfig& config, const ProblemInstance& problem,
                                  const NamedState& init) {
  if (config.dts.size() < 3) throw ConfigError("a convergence study needs at least three dt values", "dts");
  if (config.tableau == "custom") throw ConfigError("convergence studies need a named tableau", "tableau");
  ReferenceSpec ref;
  ref.dt = config.reference_dt;
  if (config.tableau == "rattle-midpoint") ref.method = "rattle-midpoint";
  return estimate_order(*problem.system, init.state, config.t_end, config.tableau, config.dts, config.solver, ref);
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string preset_description(std::string_view name) {
  const Preset* p = find_preset(name);
  if (!p) throw ConfigError("unknown preset '" + std::string(name) + "'", "preset");
  return p->description;
}

std::string preset_json(std::string_view name) {
  const Preset* p = find_preset(name);
  if (!p) throw ConfigError("unknown preset '" + std::string(name) + "'", "preset");
  return json::parse(p->body).dump(2);
}

ExperimentConfig parse_config(std::string_view json_text, bool require_run_fields) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(json_text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<document>", line);
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "<document>");

  if (doc.contains("preset")) {
    const std::string name = get_string(doc, "preset");
    json merged = json::parse(preset_json(name));
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key() != "preset") merged[it.key()] = it.value();
    }
    doc = std::move(merged);
  }

  ExperimentConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "experiment") c.experiment = get_string(doc, key);
    else if (key == "problem") c.problem = get_string(doc, key);
    else if (key == "L") c.vehicle.L = get_number(doc, key);
    else if (key == "alpha") c.vehicle.alpha = get_number(doc, key);
    else if (key == "beta") c.vehicle.beta = get_number(doc, key);
    else if (key == "potential") {
      const std::string v = get_string(doc, key);
      if (v == "zero") c.vehicle.potential = VehiclePotential::zero;
      else if (v == "cosine-bowl") c.vehicle.potential = VehiclePotential::cosine_bowl;
      else throw ConfigError("potential must be 'zero' or 'cosine-bowl'", key);
    }
    else if (key == "lock_steering") c.vehicle.lock_steering = get_bool(doc, key);
    else if (key == "radius") c.circle.radius = get_number(doc, key);
    else if (key == "gravity") c.circle.gravity = get_number(doc, key);
    else if (key == "initial_state") c.initial_state = get_string(doc, key);
    else if (key == "rate") c.rate = get_number(doc, key);
    else if (key == "q") c.q = get_vector(doc, key);
    else if (key == "p") c.p = get_vector(doc, key);
    else if (key == "qdot") c.qdot = get_vector(doc, key);
    else if (key == "lambda") c.lambda = get_vector(doc, key);
    else if (key == "tableau") c.tableau = get_string(doc, key);
    else if (key == "tableau_a" || key == "tableau_b" || key == "tableau_c") continue;
    else if (key == "dt") c.solver.dt = get_number(doc, key);
    else if (key == "t_end") c.t_end = get_number(doc, key);
    else if (key == "newton_tol") c.solver.newton_tol = get_number(doc, key);
    else if (key == "newton_max_iter") c.solver.newton_max_iter = get_int(doc, key);
    else if (key == "fd_step") c.solver.fd_step = get_number(doc, key);
    else if (key == "jacobian_mode") {
      const std::string v = get_string(doc, key);
      if (v == "analytic-if-available") c.solver.jacobian_mode = JacobianMode::analytic_if_available;
      else if (v == "finite-difference") c.solver.jacobian_mode = JacobianMode::finite_difference;
      else throw ConfigError("jacobian_mode must be 'analytic-if-available' or 'finite-difference'", key);
    }
    else if (key == "energy") c.energy = get_bool(doc, key);
    else if (key == "constraints") c.constraints = get_bool(doc, key);
    else if (key == "symplecticity") c.symplecticity = get_bool(doc, key);
    else if (key == "symplecticity_steps") c.symplecticity_steps = get_int(doc, key);
    else if (key == "convergence") c.convergence = get_bool(doc, key);
    else if (key == "dts") c.dts = get_vector(doc, key);
    else if (key == "reference_dt") c.reference_dt = get_number(doc, key);
    else if (key == "trajectory_file") c.trajectory_file = get_string(doc, key);
    else if (key == "diagnostics_file") c.diagnostics_file = get_string(doc, key);
    else throw ConfigError("unknown field '" + key + "'", key);
  }

  if (c.problem.empty()) throw ConfigError("missing required field 'problem'", "problem");
  if (c.problem != "vehicle" && c.problem != "heisenberg" && c.problem != "circle") {
    throw ConfigError("unknown problem '" + c.problem + "'", "problem");
  }
  if (require_run_fields) {
    if (!doc.contains("dt")) throw ConfigError("missing required field 'dt'", "dt");
    if (!doc.contains("t_end")) throw ConfigError("missing required field 't_end'", "t_end");
    c.solver.validate();
    if (!(c.t_end > 0.0)) throw ConfigError("t_end must be positive", "t_end");
  }
  if (c.symplecticity_steps < 0) throw ConfigError("symplecticity_steps must be non-negative", "symplecticity_steps");

  if (c.tableau == "custom") {
    if (!doc.contains("tableau_a") || !doc.contains("tableau_b")) {
      throw ConfigError("custom tableau needs tableau_a and tableau_b", "tableau_a");
    }
    ButcherTableau t;
    t.name = "custom";
    t.a = get_matrix(doc, "tableau_a");
    t.b = to_eigen(get_vector(doc, "tableau_b"));
    t.c = doc.contains("tableau_c") ? Vector(to_eigen(get_vector(doc, "tableau_c"))) : Vector(t.a.rowwise().sum());
    if (t.b.size() != t.a.rows() || t.c.size() != t.a.rows()) {
      throw ConfigError("tableau_b and tableau_c must match the size of tableau_a", "tableau_b");
    }
    c.custom_tableau = std::move(t);
  } else if (c.tableau != "rattle-midpoint") {
    try {
      (void)tableau_by_name(c.tableau);
    } catch (const Error&) {
      throw ConfigError("unknown tableau '" + c.tableau + "'", "tableau");
    }
  }
  return c;
}

ProblemInstance make_problem(const ExperimentConfig& config) {
  ProblemInstance inst;
  inst.name = config.problem;
  std::vector<std::string> qn, pn, ln, lhn, tail;
  if (config.problem == "heisenberg") {
    inst.system = build_system(heisenberg_problem());
    qn = {"x", "y", "z"};
    ln = {"lambda"};
    tail = {"H", "res_g"};
    inst.newton_column = false;
  } else if (config.problem == "vehicle") {
    inst.system = build_system(vehicle_problem(config.vehicle));
    qn = {"x", "y", "theta", "phi"};
    ln = {"lambda_1", "lambda_2"};
    tail = {"H", "res_g_max"};
    if (config.vehicle.lock_steering) {
      lhn = {"lambda_h"};
      tail.insert(tail.end(), {"res_h", "res_hidden"});
    }
  } else if (config.problem == "circle") {
    inst.system = build_system(circle_problem(config.circle));
    qn = {"x", "y"};
    lhn = {"lambda_h"};
    tail = {"H", "res_h", "res_hidden"};
  } else {
    throw ConfigError("unknown problem '" + config.problem + "'", "problem");
  }
  for (const auto& q : qn) pn.push_back("p_" + q);
  inst.columns = {"t"};
  for (auto* group : {&qn, &pn, &ln, &lhn, &tail}) inst.columns.insert(inst.columns.end(), group->begin(), group->end());
  if (inst.newton_column) inst.columns.push_back("newton_iters");
  return inst;
}

NamedState make_initial_state(const ProblemInstance& problem, const ExperimentConfig& config) {
  const VakonomicSystem& sys = *problem.system;
  const DarbouxDims d = sys.dims();

  if (config.q) {
    auto check_len = [](const std::vector<double>& v, int n, const char* field) {
      if (static_cast<int>(v.size()) != n) {
        throw ConfigError(std::string("field '") + field + "' must have length " + std::to_string(n), field);
      }
    };
    check_len(*config.q, d.n, "q");
    PhaseState s = PhaseState::zeros(d);
    s.q = to_eigen(*config.q);
    if (config.lambda) {
      check_len(*config.lambda, d.k, "lambda");
      s.lambda = to_eigen(*config.lambda);
    }
    if (config.p) {
      check_len(*config.p, d.n, "p");
      s.p = to_eigen(*config.p);
    } else if (config.qdot) {
      check_len(*config.qdot, d.n, "qdot");
      s.p = sys.legendre(s.q, to_eigen(*config.qdot), s.lambda);
    } else {
      throw ConfigError("explicit initial state needs 'p' or 'qdot'", "p");
    }
    return NamedState{"explicit", std::move(s), "from config"};
  }

  const std::string& label = config.initial_state;
  if (problem.name == "heisenberg") {
    if (label.empty() || label == "geodesic") return heisenberg_named_state();
  } else if (problem.name == "vehicle") {
    if (label == "straight" || (label.empty() && !config.vehicle.lock_steering)) {
      return vehicle_named_state(VehicleMotion::straight, config.vehicle);
    }
    if (label == "circular") return vehicle_named_state(VehicleMotion::circular, config.vehicle, config.rate);
    if (label == "bowl") return vehicle_bowl_state(config.vehicle);
    if (label == "locked" || (label.empty() && config.vehicle.lock_steering)) return vehicle_locked_state(config.vehicle);
  } else if (problem.name == "circle") {
    if (label.empty() || label == "circle") return circle_named_state(config.circle, config.rate);
  }
  throw ConfigError("unknown initial state '" + label + "' for problem '" + problem.name + "'", "initial_state");
}

std::unique_ptr<Stepper> make_configured_stepper(const ProblemInstance& problem, const ExperimentConfig& config) {
  if (config.tableau == "custom") {
    if (problem.system->dims().l > 0) {
      throw ConfigError("holonomic constraints need the rattle-midpoint integrator", "tableau");
    }
    return std::make_unique<SrkStepper>(*problem.system, *config.custom_tableau, config.solver);
  }
  try {
    return make_stepper(*problem.system, config.tableau, config.solver);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what(), "tableau");
  }
}

std::string trajectory_csv(const ProblemInstance& problem, const Trajectory& traj) {
  std::string out;
  for (std::size_t i = 0; i < problem.columns.size(); ++i) {
    if (i) out += ',';
    out += problem.columns[i];
  }
  out += '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += ',';
    out += buf;
  };
  const int l = problem.system->dims().l;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const PhaseState& s = traj.states[i];
    const StepRecord& r = traj.records[i];
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
    out += buf;
    for (auto* v : {&s.q, &s.p, &s.lambda, &s.lambda_h}) {
      for (Eigen::Index j = 0; j < v->size(); ++j) put((*v)[j]);
    }
    put(r.energy);
    if (problem.system->dims().k > 0) put(r.endpoint_residual);
    if (l > 0) {
      put(r.holonomic_residual);
      put(r.hidden_residual);
    }
    if (problem.newton_column) out += "," + std::to_string(r.newton_iterations);
    out += '\n';
  }
  return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const ProblemInstance problem = make_problem(config);
  const NamedState init = make_initial_state(problem, config);
  auto stepper = make_configured_stepper(problem, config);
  const Trajectory traj = integrate(*stepper, init.state, config.t_end);
  const int l = problem.system->dims().l;

  json report = base_report(config, problem, init);
  report["steps"] = static_cast<long>(traj.states.size()) - 1;
  if (config.energy) report["energy"] = energy_json(energy_error_series(*problem.system, traj));
  if (config.constraints) {
    report["constraints"] = audit_json(constraint_audit(*problem.system, traj, &problem.system->problem()), l);
  }
  if (config.symplecticity) {
    json s{{"tableau_residual", tableau_residual(config)}, {"n_steps", config.symplecticity_steps}};
    if (l == 0) {
      const SymplecticityReport sr = symplecticity_report(*stepper, traj.states.front(), config.symplecticity_steps);
      s["defect"] = sr.defect;
      s["fd_step"] = sr.fd_step;
      s["column_condition"] = sr.column_condition;
    } else {
      s["defect"] = nullptr;
    }
    report["symplecticity"] = s;
  }
  if (config.convergence) report["convergence"] = convergence_json(run_convergence(config, problem, init));
  report["warnings"] = traj.warnings;

  ExperimentOutcome out;
  out.trajectory_path = out_dir / config.trajectory_file;
  write_file(*out.trajectory_path, trajectory_csv(problem, traj));
  out.report_json = report.dump(2);
  out.report_path = out_dir / config.diagnostics_file;
  write_file(out.report_path, out.report_json + "\n");
  return out;
}

ExperimentOutcome converge_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  if (config.dts.size() < 3) throw ConfigError("a convergence study needs at least three dt values", "dts");
  const ProblemInstance problem = make_problem(config);
  const NamedState init = make_initial_state(problem, config);
  const ConvergenceReport c = run_convergence(config, problem, init);

  json report = base_report(config, problem, init);
  report["convergence"] = convergence_json(c);

  ExperimentOutcome out;
  if (std::isfinite(c.order)) out.order = c.order;
  out.report_json = report.dump(2);
  out.report_path = out_dir / "convergence.json";
  write_file(out.report_path, out.report_json + "\n");
  return out;
}

ExperimentOutcome check_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const ProblemInstance problem = make_problem(config);
  const NamedState init = make_initial_state(problem, config);
  auto stepper = make_configured_stepper(problem, config);
  const Trajectory traj = integrate(*stepper, init.state, config.t_end);
  const int l = problem.system->dims().l;

  json report = base_report(config, problem, init);
  json checks = json::array();
  bool all = true;
  auto add = [&](const std::string& name, double value, double threshold) {
    const bool pass = std::isfinite(value) && value <= threshold;
    all = all && pass;
    checks.push_back(json{{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
  };

  const double tres = tableau_residual(config);
  add("tableau_symplecticity_residual", tres, 1e-15);

  json symp{{"tableau_residual", tres}, {"n_steps", config.symplecticity_steps}};
  if (l == 0) {
    const SymplecticityReport sr = symplecticity_report(*stepper, traj.states.front(), config.symplecticity_steps);
    symp["defect"] = sr.defect;
    symp["fd_step"] = sr.fd_step;
    symp["column_condition"] = sr.column_condition;
    add("flow_map_symplecticity_defect", sr.defect, 1e-6);
  } else {
    symp["defect"] = nullptr;
  }
  report["symplecticity"] = symp;

  const ConstraintAudit audit = constraint_audit(*problem.system, traj, &problem.system->problem());
  report["constraints"] = audit_json(audit, l);
  if (problem.system->dims().k > 0) {
    add("endpoint_constraint_residual", audit.endpoint_max, 1e-11);
    add("stage_constraint_residual", audit.stage_max, 1e-11);
  }
  if (l > 0) {
    add("holonomic_residual", audit.holonomic_max, 1e-12);
    add("hidden_constraint_residual", audit.hidden_max, 1e-10);
  }
  report["energy"] = energy_json(energy_error_series(*problem.system, traj));
  report["steps"] = static_cast<long>(traj.states.size()) - 1;
  report["warnings"] = traj.warnings;
  report["checks"] = checks;
  report["summary"] = all ? "pass" : "fail";

  ExperimentOutcome out;
  out.passed = all;
  out.report_json = report.dump(2);
  out.report_path = out_dir / "check.json";
  write_file(out.report_path, out.report_json + "\n");
  return out;
}

std::string error_record_json(const std::exception& e) {
  json err{{"message", e.what()}};
  err["code"] = "internal";
  if (const auto* ie = dynamic_cast<const Error*>(&e)) {
    err["code"] = error_code_name(ie->code());
    if (const auto* ce = dynamic_cast<const ConfigError*>(ie)) {
      err["field"] = ce->field();
      if (ce->line()) err["line"] = *ce->line();
    } else if (const auto* sf = dynamic_cast<const StepFailure*>(ie)) {
      if (sf->step()) err["step"] = *sf->step();
      if (std::isfinite(sf->residual())) err["residual"] = sf->residual();
    } else if (const auto* iv = dynamic_cast<const IndexViolation*>(ie)) {
      if (iv->step()) err["step"] = *iv->step();
    }
  }
  return json{{"error", err}}.dump();
}

}  // namespace indexone
