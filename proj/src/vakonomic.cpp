#include "indexone/vakonomic.hpp"

#include <cmath>
#include <string>

namespace indexone {

void VakonomicProblem::validate() const {
  if (n < 1) throw DimensionError("vakonomic problem needs n >= 1");
  if (mass.rows() != n || mass.cols() != n) {
    throw DimensionError("mass matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!mass.allFinite()) throw Error(ErrorCode::invalid_argument, "mass matrix has non-finite entries");
  const double asym = (mass - mass.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-14 * std::max(1.0, mass.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::invalid_argument, "mass matrix is not symmetric");
  }
  if (!potential || !potential_gradient) throw Error(ErrorCode::invalid_argument, "potential and its gradient are required");
  for (std::size_t i = 0; i < velocity_constraints.size(); ++i) {
    if (!velocity_constraints[i].field) {
      throw Error(ErrorCode::invalid_argument, "velocity constraint " + std::to_string(i) + " has no field");
    }
  }
  for (std::size_t i = 0; i < holonomic_constraints.size(); ++i) {
    if (!holonomic_constraints[i].value || !holonomic_constraints[i].gradient) {
      throw Error(ErrorCode::invalid_argument, "holonomic constraint " + std::to_string(i) + " is incomplete");
    }
  }
}

VakonomicSystem::VakonomicSystem(VakonomicProblem problem) : problem_(std::move(problem)) {
  problem_.validate();
  dims_ = DarbouxDims(problem_.n, problem_.k(), problem_.l());

  Eigen::LLT<Matrix> llt(problem_.mass);
  if (llt.info() == Eigen::Success) {
    mass_factor_ = std::move(llt);
  } else {
    Eigen::PartialPivLU<Matrix> lu(problem_.mass);
    if (!(lu.rcond() > 1e-14)) throw SingularMatrixError("mass matrix is singular", lu.rcond());
    mass_factor_ = std::move(lu);
  }
}

void VakonomicSystem::check_q(const Vector& q) const {
  if (q.size() != dims_.n) throw DimensionError("configuration vector has wrong length");
}

Vector VakonomicSystem::mass_solve(const Vector& rhs) const {
  return std::visit([&](const auto& f) -> Vector { return f.solve(rhs); }, mass_factor_);
}

Matrix VakonomicSystem::constraint_matrix(const Vector& q) const {
  check_q(q);
  Matrix g(dims_.k, dims_.n);
  for (int i = 0; i < dims_.k; ++i) {
    const Vector gi = problem_.velocity_constraints[static_cast<std::size_t>(i)].field(q);
    if (gi.size() != dims_.n) throw DimensionError("constraint field " + std::to_string(i) + " has wrong length");
    g.row(i) = gi.transpose();
  }
  return g;
}

Matrix VakonomicSystem::constraint_jacobian(int i, const Vector& q) const {
  const auto& c = problem_.velocity_constraints[static_cast<std::size_t>(i)];
  if (c.jacobian) return c.jacobian(q);
  return finite_difference_jacobian(c.field, q);
}

double VakonomicSystem::hamiltonian(const Vector& z) const {
  const PhaseState s = state(z);
  const Vector u = s.p + constraint_matrix(s.q).transpose() * s.lambda;
  double h = 0.5 * u.dot(mass_solve(u)) + problem_.potential(s.q);
  for (int j = 0; j < dims_.l; ++j) {
    h += s.lambda_h[j] * problem_.holonomic_constraints[static_cast<std::size_t>(j)].value(s.q);
  }
  return h;
}

Vector VakonomicSystem::gradient(const Vector& z) const {
  const PhaseState s = state(z);
  const Matrix g = constraint_matrix(s.q);
  const Vector qdot = mass_solve(s.p + g.transpose() * s.lambda);

  Vector h_q = problem_.potential_gradient(s.q);
  if (h_q.size() != dims_.n) throw DimensionError("potential gradient has wrong length");
  for (int i = 0; i < dims_.k; ++i) {
    h_q += s.lambda[i] * constraint_jacobian(i, s.q).transpose() * qdot;
  }
  for (int j = 0; j < dims_.l; ++j) {
    h_q += s.lambda_h[j] * problem_.holonomic_constraints[static_cast<std::size_t>(j)].gradient(s.q);
  }

  Vector out(dims_.m());
  out << h_q, qdot, g * qdot, holonomic_values(s.q);
  return out;
}

std::optional<Vector> VakonomicSystem::multipliers(const Vector& q, const Vector& p) const {
  return solve_multipliers(q, p);
}

Vector VakonomicSystem::holonomic_values(const Vector& q) const {
  Vector h(dims_.l);
  for (int j = 0; j < dims_.l; ++j) h[j] = problem_.holonomic_constraints[static_cast<std::size_t>(j)].value(q);
  return h;
}

Matrix VakonomicSystem::holonomic_jacobian(const Vector& q) const {
  Matrix jac(dims_.l, dims_.n);
  for (int j = 0; j < dims_.l; ++j) {
    jac.row(j) = problem_.holonomic_constraints[static_cast<std::size_t>(j)].gradient(q).transpose();
  }
  return jac;
}

Vector VakonomicSystem::solve_multipliers(const Vector& q, const Vector& p) const {
  if (p.size() != dims_.n) throw DimensionError("momentum vector has wrong length");
  if (dims_.k == 0) return Vector(0);
  const Matrix g = constraint_matrix(q);
  Matrix minv_gt(dims_.n, dims_.k);
  for (int i = 0; i < dims_.k; ++i) minv_gt.col(i) = mass_solve(g.row(i).transpose());
  const Matrix schur = g * minv_gt;
  const Vector rhs = -(g * mass_solve(p));
  try {
    return solve_dense_linear(schur, rhs);
  } catch (const SingularMatrixError& e) {
    throw RankDeficiencyError(std::string("constraint fields are linearly dependent (G M^-1 G^T singular): ") +
                              e.what());
  }
}

Vector VakonomicSystem::legendre(const Vector& q, const Vector& qdot, const Vector& lambda) const {
  if (qdot.size() != dims_.n || lambda.size() != dims_.k) throw DimensionError("legendre: dimension mismatch");
  return problem_.mass * qdot - constraint_matrix(q).transpose() * lambda;
}

Vector VakonomicSystem::velocity(const Vector& q, const Vector& p, const Vector& lambda) const {
  if (p.size() != dims_.n || lambda.size() != dims_.k) throw DimensionError("velocity: dimension mismatch");
  return mass_solve(p + constraint_matrix(q).transpose() * lambda);
}

Vector VakonomicSystem::constraint_velocity_residual(const Vector& q, const Vector& p, const Vector& lambda) const {
  return constraint_matrix(q) * velocity(q, p, lambda);
}

std::shared_ptr<const VakonomicSystem> build_system(VakonomicProblem problem) {
  return std::make_shared<const VakonomicSystem>(std::move(problem));
}

}  // namespace indexone
