#include "indexone/indexone.h"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "indexone/experiment.hpp"
#include "json.hpp"

using namespace indexone;
using nlohmann::json;

struct ix_system {
  ExperimentConfig config;
  ProblemInstance problem;
};

struct ix_trajectory {
  Trajectory traj;
};

namespace {

thread_local std::string g_last_message;
thread_local std::string g_last_json;

void clear_error() {
  g_last_message.clear();
  g_last_json.clear();
}

ix_status record(const std::exception& e) {
  g_last_message = e.what();
  g_last_json = error_record_json(e);
  if (const auto* ie = dynamic_cast<const Error*>(&e)) return static_cast<ix_status>(ie->code());
  return IX_INTERNAL;
}

ix_status fail(ix_status status, const std::string& message) {
  return record(Error(static_cast<ErrorCode>(status), message));
}

template <class F>
ix_status guarded(F&& f) noexcept {
  clear_error();
  try {
    return f();
  } catch (const std::exception& e) {
    return record(e);
  } catch (...) {
    return fail(IX_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** target, const std::string& s) {
  if (target) *target = dup_string(s);
}

Vector view(const double* z, std::size_t len) {
  return Eigen::Map<const Vector>(z, static_cast<Eigen::Index>(len));
}

void check_len(const ix_system* sys, std::size_t len) {
  const auto m = static_cast<std::size_t>(sys->problem.system->dims().m());
  if (len != m) throw DimensionError("state length " + std::to_string(len) + " != " + std::to_string(m));
}

SolverConfig to_solver(const ix_solver_config* c) {
  SolverConfig s;
  if (c) {
    s.dt = c->dt;
    s.newton_tol = c->newton_tol;
    s.newton_max_iter = c->newton_max_iter;
    s.jacobian_mode = c->finite_difference_jacobian ? JacobianMode::finite_difference
                                                    : JacobianMode::analytic_if_available;
    s.fd_step = c->fd_step;
  }
  s.validate();
  return s;
}

}  // namespace

extern "C" {

const char* ix_status_name(ix_status status) { return error_code_name(static_cast<ErrorCode>(status)); }

const char* ix_last_error_message(void) { return g_last_message.c_str(); }

const char* ix_last_error_json(void) { return g_last_json.c_str(); }

void ix_free_string(char* s) { std::free(s); }

ix_status ix_system_create(const char* problem, const char* params_json, ix_system** out) {
  return guarded([&] {
    if (!problem || !out) return fail(IX_INVALID_ARGUMENT, "problem and out must not be null");
    *out = nullptr;
    json doc = json::object();
    if (params_json && *params_json) {
      try {
        doc = json::parse(params_json);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed parameter JSON: ") + e.what(), "<params>");
      }
      if (!doc.is_object()) throw ConfigError("parameters must be a JSON object", "<params>");
    }
    doc["problem"] = problem;
    auto sys = std::make_unique<ix_system>();
    sys->config = parse_config(doc.dump(), false);
    sys->problem = make_problem(sys->config);
    *out = sys.release();
    return IX_OK;
  });
}

void ix_system_destroy(ix_system* system) { delete system; }

ix_status ix_system_dims(const ix_system* system, ix_dims* out) {
  return guarded([&] {
    if (!system || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    const DarbouxDims d = system->problem.system->dims();
    *out = ix_dims{d.n, d.k, d.l};
    return IX_OK;
  });
}

ix_status ix_system_hamiltonian(const ix_system* system, const double* z, size_t len, double* out) {
  return guarded([&] {
    if (!system || !z || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    check_len(system, len);
    *out = system->problem.system->hamiltonian(view(z, len));
    return IX_OK;
  });
}

ix_status ix_system_gradient(const ix_system* system, const double* z, size_t len, double* out) {
  return guarded([&] {
    if (!system || !z || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    check_len(system, len);
    const Vector g = system->problem.system->gradient(view(z, len));
    std::copy(g.data(), g.data() + g.size(), out);
    return IX_OK;
  });
}

ix_status ix_system_named_state(const ix_system* system, const char* label, double rate, double* z_out,
                                size_t len) {
  return guarded([&] {
    if (!system || !z_out) return fail(IX_INVALID_ARGUMENT, "null argument");
    check_len(system, len);
    ExperimentConfig cfg = system->config;
    cfg.initial_state = label ? label : "";
    cfg.rate = rate;
    const Vector z = make_initial_state(system->problem, cfg).state.pack();
    std::copy(z.data(), z.data() + z.size(), z_out);
    return IX_OK;
  });
}

ix_status ix_system_solve_multipliers(const ix_system* system, const double* q, const double* p,
                                      double* lambda_out) {
  return guarded([&] {
    if (!system || !q || !p) return fail(IX_INVALID_ARGUMENT, "null argument");
    const DarbouxDims d = system->problem.system->dims();
    if (d.k > 0 && !lambda_out) return fail(IX_INVALID_ARGUMENT, "null lambda_out");
    const auto n = static_cast<std::size_t>(d.n);
    const Vector lam = system->problem.system->solve_multipliers(view(q, n), view(p, n));
    std::copy(lam.data(), lam.data() + lam.size(), lambda_out);
    return IX_OK;
  });
}

void ix_solver_config_default(ix_solver_config* out) {
  if (!out) return;
  const SolverConfig s;
  *out = ix_solver_config{s.dt, s.newton_tol, s.newton_max_iter,
                          s.jacobian_mode == JacobianMode::finite_difference ? 1 : 0, s.fd_step};
}

ix_status ix_integrate(const ix_system* system, const double* z0, size_t len, double t_end, const char* method,
                       const ix_solver_config* config, ix_trajectory** out) {
  return guarded([&] {
    if (!system || !z0 || !method || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    check_len(system, len);
    const SolverConfig cfg = to_solver(config);
    auto stepper = make_stepper(*system->problem.system, method, cfg);
    auto traj = std::make_unique<ix_trajectory>();
    traj->traj = integrate(*stepper, system->problem.system->state(view(z0, len)), t_end);
    *out = traj.release();
    return IX_OK;
  });
}

void ix_trajectory_destroy(ix_trajectory* traj) { delete traj; }

size_t ix_trajectory_length(const ix_trajectory* traj) { return traj ? traj->traj.size() : 0; }

ix_status ix_trajectory_state(const ix_trajectory* traj, size_t index, double* t, double* z_out, size_t len) {
  return guarded([&] {
    if (!traj) return fail(IX_INVALID_ARGUMENT, "null trajectory");
    if (index >= traj->traj.size()) return fail(IX_INVALID_ARGUMENT, "trajectory index out of range");
    if (t) *t = traj->traj.times[index];
    if (z_out) {
      const Vector z = traj->traj.states[index].pack();
      if (len != static_cast<std::size_t>(z.size())) throw DimensionError("state buffer has the wrong length");
      std::copy(z.data(), z.data() + z.size(), z_out);
    }
    return IX_OK;
  });
}

ix_status ix_trajectory_record(const ix_trajectory* traj, size_t index, ix_step_record* out) {
  return guarded([&] {
    if (!traj || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    if (index >= traj->traj.size()) return fail(IX_INVALID_ARGUMENT, "trajectory index out of range");
    const StepRecord& r = traj->traj.records[index];
    *out = ix_step_record{r.energy,           r.endpoint_residual,  r.newton_iterations,
                          r.stage_residual_max, r.holonomic_residual, r.hidden_residual};
    return IX_OK;
  });
}

ix_status ix_tableau_symplecticity_residual(const char* name, double* out) {
  return guarded([&] {
    if (!name || !out) return fail(IX_INVALID_ARGUMENT, "null argument");
    *out = symplecticity_residual(tableau_by_name(name));
    return IX_OK;
  });
}

ix_status ix_experiment_run(const char* config_json, const char* out_dir, char** report_json) {
  return guarded([&] {
    if (!config_json || !out_dir) return fail(IX_INVALID_ARGUMENT, "null argument");
    const ExperimentOutcome o = run_experiment(parse_config(config_json), out_dir);
    set_out(report_json, o.report_json);
    return IX_OK;
  });
}

ix_status ix_experiment_converge(const char* config_json, const char* out_dir, char** report_json, double* order) {
  return guarded([&] {
    if (!config_json || !out_dir) return fail(IX_INVALID_ARGUMENT, "null argument");
    const ExperimentOutcome o = converge_experiment(parse_config(config_json, false), out_dir);
    if (order) *order = o.order.value_or(std::numeric_limits<double>::quiet_NaN());
    set_out(report_json, o.report_json);
    return IX_OK;
  });
}

ix_status ix_experiment_check(const char* config_json, const char* out_dir, char** report_json, int* passed) {
  return guarded([&] {
    if (!config_json || !out_dir) return fail(IX_INVALID_ARGUMENT, "null argument");
    const ExperimentOutcome o = check_experiment(parse_config(config_json), out_dir);
    if (passed) *passed = o.passed ? 1 : 0;
    set_out(report_json, o.report_json);
    return IX_OK;
  });
}

ix_status ix_preset_list(char** names_json) {
  return guarded([&] {
    if (!names_json) return fail(IX_INVALID_ARGUMENT, "null argument");
    json list = json::array();
    for (const auto& name : preset_names()) list.push_back({{"name", name}, {"description", preset_description(name)}});
    *names_json = dup_string(list.dump(2));
    return IX_OK;
  });
}

ix_status ix_preset_get(const char* name, char** config_json) {
  return guarded([&] {
    if (!name || !config_json) return fail(IX_INVALID_ARGUMENT, "null argument");
    *config_json = dup_string(preset_json(name));
    return IX_OK;
  });
}

}  // extern "C"
