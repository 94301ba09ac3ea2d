#include "indexone/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace indexone {

namespace {

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Vector run_map(Stepper& stepper, const PhaseState& z0, int n_steps) {
  const IndexOneSystem& system = stepper.system();
  const SolverConfig& cfg = stepper.config();
  const MultiplierSolveOptions mopts{cfg.newton_tol, cfg.newton_max_iter, cfg.fd_step};
  PhaseState z = place_on_manifold(system, z0, mopts);
  for (int i = 0; i < n_steps; ++i) z = stepper.step(z).state;
  Vector out(2 * z.q.size());
  out << z.q, z.p;
  return out;
}

Matrix fd_flow_jacobian(Stepper& stepper, const PhaseState& z0, int n_steps, double rel_step) {
  const int n = static_cast<int>(z0.q.size());
  Vector x0(2 * n);
  x0 << z0.q, z0.p;
  Matrix jac(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x0[i]));
    PhaseState plus = z0;
    PhaseState minus = z0;
    if (i < n) {
      plus.q[i] += h;
      minus.q[i] -= h;
    } else {
      plus.p[i - n] += h;
      minus.p[i - n] -= h;
    }
    try {
      jac.col(i) = (run_map(stepper, plus, n_steps) - run_map(stepper, minus, n_steps)) / (2.0 * h);
    } catch (const Error& e) {
      const std::string label = (i < n ? "q" : "p") + std::to_string(i < n ? i : i - n);
      throw StepFailure("flow-map step failed when perturbing component " + std::to_string(i) + " (" + label +
                            "): " + e.what(),
                        std::numeric_limits<double>::quiet_NaN());
    }
  }
  return jac;
}

}  // namespace

std::vector<double> energy_error_series(const IndexOneSystem& system, const Trajectory& traj) {
  std::vector<double> out;
  if (traj.states.empty()) return out;
  out.reserve(traj.states.size());
  const double h0 = system.hamiltonian(traj.states.front().pack());
  for (const auto& s : traj.states) out.push_back(system.hamiltonian(s.pack()) - h0);
  return out;
}

EnergySummary summarize_energy(const std::vector<double>& series) {
  EnergySummary s;
  const std::size_t n = series.size();
  if (n == 0) return s;
  const std::size_t mid = (n - 1) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::abs(series[i]);
    s.max_abs = std::max(s.max_abs, a);
    if (i <= mid) {
      s.first_half_max = std::max(s.first_half_max, a);
    } else {
      s.second_half_max = std::max(s.second_half_max, a);
    }
  }
  s.bounded = s.second_half_max <= 2.0 * s.first_half_max;
  return s;
}

double symplecticity_defect(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() % 2 != 0) {
    throw DimensionError("symplecticity defect needs a square matrix of even dimension");
  }
  const Matrix jc = StructureMatrix::canonical(static_cast<int>(a.rows() / 2));
  const Matrix d = a.transpose() * jc * a - jc;
  return d.cwiseAbs().rowwise().sum().maxCoeff();
}

Matrix flow_map_jacobian(Stepper& stepper, const PhaseState& z0, int n_steps, double rel_step) {
  if (n_steps < 0) throw Error(ErrorCode::invalid_argument, "n_steps must be non-negative");
  z0.check(stepper.system().dims());
  return fd_flow_jacobian(stepper, z0, n_steps, rel_step);
}

Matrix flow_map_jacobian(const IndexOneSystem& system, const PhaseState& z0, const ButcherTableau& tableau,
                         const SolverConfig& config, int n_steps) {
  SrkStepper stepper(system, tableau, config);
  return flow_map_jacobian(stepper, z0, n_steps);
}

SymplecticityReport symplecticity_report(Stepper& stepper, const PhaseState& z0, int n_steps, double rel_step) {
  SymplecticityReport r;
  r.n_steps = n_steps;
  r.fd_step = rel_step;
  const Matrix a = flow_map_jacobian(stepper, z0, n_steps, rel_step);
  const Matrix a2 = flow_map_jacobian(stepper, z0, n_steps, 2.0 * rel_step);
  r.defect = symplecticity_defect(a);
  for (Eigen::Index j = 0; j < a.cols(); ++j) r.column_condition.push_back(inf_norm(a.col(j) - a2.col(j)));
  return r;
}

double fit_order(const std::vector<double>& dts, const std::vector<double>& errors) {
  if (dts.size() != errors.size()) throw DimensionError("fit_order: dts and errors differ in length");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(dts[i] > 0.0) || !(errors[i] > 0.0) || !std::isfinite(errors[i])) continue;
    const double x = std::log(dts[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / denom;
}

ConvergenceReport estimate_order(const IndexOneSystem& system, const PhaseState& z0, double t_end,
                                 const std::string& method, const std::vector<double>& dts,
                                 const SolverConfig& base_config, const ReferenceSpec& reference) {
  if (dts.size() < 3) throw ConfigError("a convergence study needs at least three dt values", "dts");
  for (double dt : dts) {
    if (!(dt > 0.0)) throw ConfigError("dt values must be positive", "dts");
  }
  const double ratio = dts[1] / dts[0];
  if (std::abs(ratio - 1.0) < 1e-12) throw ConfigError("dt values must be distinct", "dts");
  for (std::size_t i = 1; i < dts.size(); ++i) {
    if (std::abs(dts[i] / dts[i - 1] - ratio) > 1e-9 * ratio) {
      throw ConfigError("dt values must be geometrically spaced", "dts");
    }
  }
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive", "t_end");

  ConvergenceReport report;
  report.dts = dts;
  report.reference_method = reference.method;

  Vector ref(2 * z0.q.size());
  if (reference.solution) {
    ref << reference.solution->q, reference.solution->p;
    report.reference_dt = reference.dt;
  } else {
    double dt_ref = reference.dt;
    if (dt_ref <= 0.0) dt_ref = *std::min_element(dts.begin(), dts.end()) / 20.0;
    const long steps = step_count(t_end, dt_ref);
    SolverConfig cfg = base_config;
    cfg.dt = t_end / static_cast<double>(steps);
    report.reference_dt = cfg.dt;
    auto stepper = make_stepper(system, reference.method, cfg);
    const Trajectory traj = integrate(*stepper, z0, t_end);
    ref << traj.states.back().q, traj.states.back().p;
  }

  for (double dt : dts) {
    const long steps = step_count(t_end, dt);
    SolverConfig cfg = base_config;
    cfg.dt = t_end / static_cast<double>(steps);
    report.effective_dts.push_back(cfg.dt);
    try {
      auto stepper = make_stepper(system, method, cfg);
      const Trajectory traj = integrate(*stepper, z0, t_end);
      Vector end(ref.size());
      end << traj.states.back().q, traj.states.back().p;
      report.errors.push_back(inf_norm(end - ref));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "dt=" << dt << ": " << e.what();
      report.failures.push_back(os.str());
      report.errors.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  report.order = fit_order(report.effective_dts, report.errors);
  return report;
}

ConstraintAudit constraint_audit(const IndexOneSystem& system, const Trajectory& traj,
                                 const VakonomicProblem* problem) {
  ConstraintAudit audit;
  const DarbouxDims d = system.dims();
  std::optional<Eigen::FullPivLU<Matrix>> mass;
  if (problem) {
    if (problem->n != d.n || problem->k() != d.k) throw DimensionError("constraint_audit: problem does not match system");
    mass.emplace(problem->mass);
  }

  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const PhaseState& s = traj.states[i];
    double r = 0.0;
    if (problem) {
      Vector u = s.p;
      std::vector<Vector> fields;
      for (int c = 0; c < d.k; ++c) {
        fields.push_back(problem->velocity_constraints[static_cast<std::size_t>(c)].field(s.q));
        u += s.lambda[c] * fields.back();
      }
      const Vector qdot = mass->solve(u);
      for (const auto& g : fields) r = std::max(r, std::abs(g.dot(qdot)));
    } else {
      r = constraint_residual_norm(system, s.pack());
    }
    audit.endpoint.push_back(r);
    audit.endpoint_max = std::max(audit.endpoint_max, r);
    if (i < traj.records.size()) audit.stage_max = std::max(audit.stage_max, traj.records[i].stage_residual_max);

    if (d.l > 0) {
      audit.holonomic_max = std::max(audit.holonomic_max, inf_norm(system.holonomic_values(s.q)));
      const Vector hp = system.gradient(s.pack()).segment(d.n, d.n);
      audit.hidden_max = std::max(audit.hidden_max, inf_norm(system.holonomic_jacobian(s.q) * hp));
    }
  }
  return audit;
}

}  // namespace indexone
