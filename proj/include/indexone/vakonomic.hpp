#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "indexone/core.hpp"

namespace indexone {

// Velocity constraint g(q) . qdot = 0.  `jacobian` returns dg/dq (row i holds
// the gradient of component i); when empty it is finite-differenced.
struct VelocityConstraint {
  std::function<Vector(const Vector&)> field;
  std::function<Matrix(const Vector&)> jacobian;
};

struct HolonomicConstraint {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

// Lagrangian 1/2 qdot^T M qdot - V(q) subject to g_i(q) . qdot = 0 and
// h_j(q) = 0.
struct VakonomicProblem {
  std::string name;
  int n = 0;
  Matrix mass;
  std::function<double(const Vector&)> potential;
  std::function<Vector(const Vector&)> potential_gradient;
  std::vector<VelocityConstraint> velocity_constraints;
  std::vector<HolonomicConstraint> holonomic_constraints;

  int k() const noexcept { return static_cast<int>(velocity_constraints.size()); }
  int l() const noexcept { return static_cast<int>(holonomic_constraints.size()); }

  // Throws DimensionError / Error(invalid_argument) when M is not square and
  // symmetric, or a callable is missing.
  void validate() const;
};

// The generalized Hamiltonian system of a vakonomic problem:
//   H(q, p, lambda, lambda_h) = 1/2 u^T M^-1 u + V(q) + sum lambda_h_j h_j(q),
//   u = p + sum lambda_i g_i(q).
// M is factorized once (Cholesky when positive definite, pivoted LU
// otherwise).
class VakonomicSystem final : public IndexOneSystem {
 public:
  explicit VakonomicSystem(VakonomicProblem problem);

  const VakonomicProblem& problem() const noexcept { return problem_; }

  DarbouxDims dims() const override { return dims_; }
  double hamiltonian(const Vector& z) const override;
  Vector gradient(const Vector& z) const override;
  std::optional<Vector> multipliers(const Vector& q, const Vector& p) const override;
  Vector holonomic_values(const Vector& q) const override;
  Matrix holonomic_jacobian(const Vector& q) const override;

  // k x n matrix with rows g_i(q)^T.
  Matrix constraint_matrix(const Vector& q) const;
  Matrix constraint_jacobian(int i, const Vector& q) const;

  Vector mass_solve(const Vector& rhs) const;

  // Solves (G M^-1 G^T) lambda = -G M^-1 p.
  Vector solve_multipliers(const Vector& q, const Vector& p) const;
  // p = M qdot - sum lambda_i g_i(q)
  Vector legendre(const Vector& q, const Vector& qdot, const Vector& lambda) const;
  // qdot = M^-1 (p + sum lambda_i g_i(q))
  Vector velocity(const Vector& q, const Vector& p, const Vector& lambda) const;
  // (g_i(q) . qdot)_i with qdot from velocity()
  Vector constraint_velocity_residual(const Vector& q, const Vector& p, const Vector& lambda) const;

 private:
  void check_q(const Vector& q) const;

  VakonomicProblem problem_;
  DarbouxDims dims_;
  std::variant<Eigen::LLT<Matrix>, Eigen::PartialPivLU<Matrix>> mass_factor_;
};

std::shared_ptr<const VakonomicSystem> build_system(VakonomicProblem problem);

}  // namespace indexone
