#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "indexone/integrators.hpp"

namespace indexone {

namespace {

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive", "dt");
  if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive", "newton_tol");
  if (newton_max_iter < 1) throw ConfigError("newton_max_iter must be at least 1", "newton_max_iter");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive", "fd_step");
}

SrkStepper::SrkStepper(const IndexOneSystem& system, ButcherTableau tableau, SolverConfig config)
    : system_(system), tableau_(std::move(tableau)), config_(config), dims_(system.dims()) {
  tableau_.validate();
  config_.validate();
  width_ = 2 * dims_.n + dims_.k;
  const int s = tableau_.stages();
  stage_states_.assign(static_cast<std::size_t>(s), Vector(dims_.m()));
  stage_gradients_.assign(static_cast<std::size_t>(s), Vector(dims_.m()));
  unknowns_.resize(s * width_);
  residual_.resize(s * width_);
  jacobian_.resize(s * width_, s * width_);
}

// d(H_q, H_p, H_lambda) / d(q, p, lambda) at z.
Matrix SrkStepper::stage_hessian(const Vector& z) const {
  if (config_.jacobian_mode == JacobianMode::analytic_if_available) {
    if (auto h = system_.hessian(z)) return h->topLeftCorner(width_, width_);
  }
  Matrix hz(width_, width_);
  Vector x = z;
  const double h = config_.fd_step;
  for (int j = 0; j < width_; ++j) {
    x[j] = z[j] + h;
    const Vector plus = system_.gradient(x);
    x[j] = z[j] - h;
    const Vector minus = system_.gradient(x);
    x[j] = z[j];
    hz.col(j) = (plus.head(width_) - minus.head(width_)) / (2.0 * h);
  }
  return hz;
}

StepResult SrkStepper::step(const PhaseState& z0) {
  z0.check(dims_);
  if (!z0.all_finite()) throw StepFailure("initial state is not finite", std::numeric_limits<double>::quiet_NaN());

  const int n = dims_.n;
  const int k = dims_.k;
  const int s = tableau_.stages();
  const int w = width_;
  const double dt = config_.dt;
  const MultiplierSolveOptions mopts{config_.newton_tol, config_.newton_max_iter, config_.fd_step};

  Vector lambda0 = z0.lambda;
  if (k > 0 && constraint_residual_norm(system_, z0.pack()) > config_.newton_tol) {
    lambda0 = solve_constraint_multipliers(system_, z0.q, z0.p, z0.lambda, z0.lambda_h, mopts);
  }
  for (int i = 0; i < s; ++i) {
    unknowns_.segment(i * w, n) = z0.q;
    unknowns_.segment(i * w + n, n) = z0.p;
    unknowns_.segment(i * w + 2 * n, k) = lambda0;
  }

  auto evaluate = [&](const Vector& x) {
    for (int i = 0; i < s; ++i) {
      auto& zi = stage_states_[static_cast<std::size_t>(i)];
      zi.head(w) = x.segment(i * w, w);
      zi.tail(dims_.l) = z0.lambda_h;
      stage_gradients_[static_cast<std::size_t>(i)] = system_.gradient(zi);
    }
    for (int i = 0; i < s; ++i) {
      Vector q_rhs = z0.q;
      Vector p_rhs = z0.p;
      for (int j = 0; j < s; ++j) {
        const Vector& gj = stage_gradients_[static_cast<std::size_t>(j)];
        q_rhs += dt * tableau_.a(i, j) * gj.segment(n, n);
        p_rhs -= dt * tableau_.a(i, j) * gj.head(n);
      }
      residual_.segment(i * w, n) = x.segment(i * w, n) - q_rhs;
      residual_.segment(i * w + n, n) = x.segment(i * w + n, n) - p_rhs;
      residual_.segment(i * w + 2 * n, k) = stage_gradients_[static_cast<std::size_t>(i)].segment(2 * n, k);
    }
    const double r = inf_norm(residual_);
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  };

  double residual = evaluate(unknowns_);
  int iterations = 0;
  std::optional<LuFactorization> lu;
  while (residual > config_.newton_tol) {
    if (iterations >= config_.newton_max_iter || !std::isfinite(residual)) {
      std::ostringstream os;
      os << "Newton iteration on the stage equations did not converge (residual " << residual << " after "
         << iterations << " iterations)";
      throw StepFailure(os.str(), residual);
    }
    jacobian_.setZero();
    for (int j = 0; j < s; ++j) {
      const Matrix hz = stage_hessian(stage_states_[static_cast<std::size_t>(j)]);
      for (int i = 0; i < s; ++i) {
        const double aij = dt * tableau_.a(i, j);
        jacobian_.block(i * w, j * w, n, w) = -aij * hz.middleRows(n, n);
        jacobian_.block(i * w + n, j * w, n, w) = aij * hz.topRows(n);
      }
      jacobian_.block(j * w, j * w, 2 * n, 2 * n).diagonal().array() += 1.0;
      jacobian_.block(j * w + 2 * n, j * w, k, w) = hz.bottomRows(k);
    }
    try {
      lu.emplace(jacobian_);
    } catch (const SingularMatrixError& e) {
      throw IndexViolation(std::string("stage Jacobian is singular (index-1 condition violated): ") + e.what());
    }
    unknowns_ -= lu->solve(residual_);
    ++iterations;
    residual = evaluate(unknowns_);
  }

  // Polish with the last factorization so the result sits at round-off level
  // rather than just under the tolerance.
  if (lu) {
    const Vector saved = unknowns_;
    const Vector saved_residual = residual_;
    unknowns_ -= lu->solve(residual_);
    const double polished = evaluate(unknowns_);
    if (polished <= residual) {
      residual = polished;
    } else {
      unknowns_ = saved;
      evaluate(unknowns_);
    }
  }

  StepResult out;
  out.state = z0;
  for (int j = 0; j < s; ++j) {
    const Vector& gj = stage_gradients_[static_cast<std::size_t>(j)];
    out.state.q += dt * tableau_.b[j] * gj.segment(n, n);
    out.state.p -= dt * tableau_.b[j] * gj.head(n);
  }
  double stage_max = 0.0;
  for (int i = 0; i < s; ++i) {
    stage_max = std::max(stage_max, inf_norm(residual_.segment(i * w + 2 * n, k)));
  }
  const Vector guess = k > 0 ? Vector(unknowns_.segment((s - 1) * w + 2 * n, k)) : Vector(0);
  out.state.lambda = solve_constraint_multipliers(system_, out.state.q, out.state.p, guess, out.state.lambda_h, mopts);
  if (!out.state.all_finite()) throw StepFailure("step produced a non-finite state", residual);

  const Vector z1 = out.state.pack();
  out.record.energy = system_.hamiltonian(z1);
  out.record.endpoint_residual = constraint_residual_norm(system_, z1);
  out.record.newton_iterations = iterations;
  out.record.stage_residual_max = stage_max;
  return out;
}

PhaseState srk_step(const IndexOneSystem& system, const PhaseState& z0, const ButcherTableau& tableau,
                    const SolverConfig& config) {
  SrkStepper stepper(system, tableau, config);
  return stepper.step(z0).state;
}

long step_count(double t_end, double dt) {
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive", "t_end");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive", "dt");
  const double ratio = t_end / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(ratio));
}

Trajectory integrate(Stepper& stepper, const PhaseState& z0, double t_end) {
  const IndexOneSystem& system = stepper.system();
  const SolverConfig& config = stepper.config();
  const DarbouxDims d = system.dims();
  z0.check(d);
  const long steps = step_count(t_end, config.dt);

  Trajectory traj;
  traj.dt = config.dt;
  const MultiplierSolveOptions mopts{config.newton_tol, config.newton_max_iter, config.fd_step};
  PhaseState start = z0;
  if (d.l > 0) start.lambda_h.setZero();
  start = place_on_manifold(system, start, mopts);
  if (d.k > 0) {
    const double moved = (start.lambda - z0.lambda).cwiseAbs().maxCoeff();
    if (moved > 1e-10) {
      std::ostringstream os;
      os << "initial multipliers replaced by the constraint solution (max change " << moved << ")";
      traj.warnings.push_back(os.str());
    }
  }

  traj.times.reserve(static_cast<std::size_t>(steps + 1));
  traj.states.reserve(static_cast<std::size_t>(steps + 1));
  traj.records.reserve(static_cast<std::size_t>(steps + 1));

  StepRecord first;
  const Vector zs = start.pack();
  first.energy = system.hamiltonian(zs);
  first.endpoint_residual = constraint_residual_norm(system, zs);
  if (d.l > 0) {
    first.holonomic_residual = inf_norm(system.holonomic_values(start.q));
    first.hidden_residual = inf_norm(system.holonomic_jacobian(start.q) * system.gradient(zs).segment(d.n, d.n));
  }
  traj.times.push_back(0.0);
  traj.states.push_back(start);
  traj.records.push_back(first);

  for (long i = 1; i <= steps; ++i) {
    StepResult r;
    try {
      r = stepper.step(traj.states.back());
    } catch (const StepFailure& e) {
      throw StepFailure(std::string(e.what()) + " at step " + std::to_string(i), e.residual(), i);
    } catch (const IndexViolation& e) {
      throw IndexViolation(std::string(e.what()) + " at step " + std::to_string(i), i);
    } catch (const ProjectionFailure& e) {
      throw ProjectionFailure(std::string(e.what()) + " at step " + std::to_string(i));
    }
    traj.times.push_back(static_cast<double>(i) * config.dt);
    traj.states.push_back(std::move(r.state));
    traj.records.push_back(r.record);
  }
  return traj;
}

Trajectory integrate(const IndexOneSystem& system, const PhaseState& z0, double t_end, const ButcherTableau& tableau,
                     const SolverConfig& config) {
  if (system.dims().l > 0) {
    throw Error(ErrorCode::invalid_argument, "systems with holonomic constraints need the rattle-midpoint integrator");
  }
  SrkStepper stepper(system, tableau, config);
  return integrate(stepper, z0, t_end);
}

std::unique_ptr<Stepper> make_stepper(const IndexOneSystem& system, std::string_view method,
                                      const SolverConfig& config) {
  if (method == "rattle-midpoint") return std::make_unique<RattleStepper>(system, config);
  if (system.dims().l > 0) {
    throw Error(ErrorCode::invalid_argument, "systems with holonomic constraints need the rattle-midpoint integrator");
  }
  return std::make_unique<SrkStepper>(system, tableau_by_name(method), config);
}

}  // namespace indexone
