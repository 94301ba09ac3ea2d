#include <cmath>
#include <functional>
#include <sstream>

#include "indexone/integrators.hpp"

namespace indexone {

namespace {

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Newton on F(x) = 0 with a central-difference Jacobian.  Returns the number
// of iterations; throws ProjectionFailure on non-convergence.
int solve_projection(const std::function<Vector(const Vector&)>& f, Vector& x, const SolverConfig& config,
                     const char* what) {
  Vector r = f(x);
  double res = inf_norm(r);
  int iter = 0;
  std::optional<LuFactorization> lu;
  while (res > config.newton_tol) {
    if (iter >= config.newton_max_iter || !std::isfinite(res)) {
      std::ostringstream os;
      os << what << " multiplier solve did not converge (residual " << res << ")";
      throw ProjectionFailure(os.str());
    }
    try {
      lu.emplace(finite_difference_jacobian(f, x, config.fd_step));
    } catch (const SingularMatrixError& e) {
      throw ProjectionFailure(std::string(what) + " constraint Jacobian lost rank: " + e.what());
    }
    x -= lu->solve(r);
    r = f(x);
    res = inf_norm(r);
    ++iter;
  }
  if (lu) {
    const Vector trial = x - lu->solve(r);
    const Vector rt = f(trial);
    if (inf_norm(rt) <= res) x = trial;
  }
  return iter;
}

}  // namespace

RattleStepper::RattleStepper(const IndexOneSystem& system, SolverConfig config)
    : system_(system), config_(config), dims_(system.dims()), inner_(system, gauss_tableau(1), config) {
  if (dims_.l < 1) throw Error(ErrorCode::invalid_argument, "rattle needs at least one holonomic constraint");
}

Vector RattleStepper::hidden_constraint(const Vector& q, const Vector& p) const {
  const MultiplierSolveOptions mopts{config_.newton_tol, config_.newton_max_iter, config_.fd_step};
  const Vector lambda_h = Vector::Zero(dims_.l);
  const Vector lambda = solve_constraint_multipliers(system_, q, p, Vector::Zero(dims_.k), lambda_h, mopts);
  Vector z(dims_.m());
  z << q, p, lambda, lambda_h;
  return system_.holonomic_jacobian(q) * system_.gradient(z).segment(dims_.n, dims_.n);
}

StepResult RattleStepper::step(const PhaseState& z0) {
  z0.check(dims_);
  const Vector h0 = system_.holonomic_values(z0.q);
  if (inf_norm(h0) > 1e-8) {
    std::ostringstream os;
    os << "rattle start is off the holonomic constraint (|h| = " << inf_norm(h0) << ")";
    throw ProjectionFailure(os.str());
  }

  PhaseState start = z0;
  start.lambda_h.setZero();
  const Matrix dh0 = system_.holonomic_jacobian(z0.q);

  // (a) + (b): impulse along Dh(q0)^T, then the midpoint step; mu is chosen
  // so that h(q1) = 0.
  StepResult inner;
  auto position_defect = [&](const Vector& mu) {
    PhaseState kicked = start;
    kicked.p = start.p - dh0.transpose() * mu;
    inner = inner_.step(kicked);
    return system_.holonomic_values(inner.state.q);
  };
  Vector mu = Vector::Zero(dims_.l);
  int iterations = solve_projection(position_defect, mu, config_, "position");
  position_defect(mu);

  // (c) closing impulse along Dh(q1)^T enforcing the hidden constraint.
  const Vector q1 = inner.state.q;
  const Vector p1_minus = inner.state.p;
  const Matrix dh1 = system_.holonomic_jacobian(q1);
  auto velocity_defect = [&](const Vector& nu) { return hidden_constraint(q1, p1_minus - dh1.transpose() * nu); };
  Vector nu = Vector::Zero(dims_.l);
  iterations += solve_projection(velocity_defect, nu, config_, "velocity");

  StepResult out;
  out.state.q = q1;
  out.state.p = p1_minus - dh1.transpose() * nu;
  out.state.lambda_h = Vector::Zero(dims_.l);
  const MultiplierSolveOptions mopts{config_.newton_tol, config_.newton_max_iter, config_.fd_step};
  out.state.lambda =
      solve_constraint_multipliers(system_, q1, out.state.p, inner.state.lambda, out.state.lambda_h, mopts);

  const Vector z1 = out.state.pack();
  out.record.energy = system_.hamiltonian(z1);
  out.record.endpoint_residual = constraint_residual_norm(system_, z1);
  out.record.newton_iterations = iterations;
  out.record.stage_residual_max = inner.record.stage_residual_max;
  out.record.holonomic_residual = inf_norm(system_.holonomic_values(q1));
  out.record.hidden_residual = inf_norm(dh1 * system_.gradient(z1).segment(dims_.n, dims_.n));
  return out;
}

PhaseState rattle_step(const IndexOneSystem& system, const PhaseState& z0, const SolverConfig& config) {
  RattleStepper stepper(system, config);
  return stepper.step(z0).state;
}

}  // namespace indexone
