#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "indexone/errors.hpp"

namespace indexone {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultFdStep = 1e-6;

// Block sizes of a state z = (q, p, lambda, lambda_h) in Darboux coordinates.
struct DarbouxDims {
  int n = 1;  // configuration coordinates
  int k = 0;  // velocity-constraint multipliers
  int l = 0;  // holonomic multipliers

  DarbouxDims() = default;
  DarbouxDims(int n_, int k_, int l_ = 0);

  int m() const noexcept { return 2 * n + k + l; }
  int q_offset() const noexcept { return 0; }
  int p_offset() const noexcept { return n; }
  int lambda_offset() const noexcept { return 2 * n; }
  int lambda_h_offset() const noexcept { return 2 * n + k; }

  friend bool operator==(const DarbouxDims&, const DarbouxDims&) = default;
};

struct PhaseState {
  Vector q;
  Vector p;
  Vector lambda;
  Vector lambda_h;

  PhaseState() = default;
  PhaseState(Vector q_, Vector p_, Vector lambda_ = Vector(), Vector lambda_h_ = Vector());

  // Zero state of the given shape.
  static PhaseState zeros(const DarbouxDims& dims);
  static PhaseState unpack(const DarbouxDims& dims, const Vector& z);

  Vector pack() const;
  bool matches(const DarbouxDims& dims) const noexcept;
  void check(const DarbouxDims& dims) const;  // throws DimensionError
  bool all_finite() const noexcept;
};

// The constant structure matrix J: canonical (0, -I; I, 0) on the (q, p) block
// and zero on the multiplier blocks.  Only the block structure is stored.
class StructureMatrix {
 public:
  explicit StructureMatrix(const DarbouxDims& dims) : dims_(dims) {}

  const DarbouxDims& dims() const noexcept { return dims_; }
  Vector apply(const Vector& v) const;      // J v
  Vector apply_transpose(const Vector& v) const;
  Matrix dense() const;
  int rank() const noexcept { return 2 * dims_.n; }

  // The canonical 2n x 2n matrix J_c.
  static Matrix canonical(int n);

 private:
  DarbouxDims dims_;
};

// Evaluation contract for J z' = grad H(z) in Darboux coordinates.
//
// Implementations are immutable after construction and every entry point is a
// pure function of (system, z), so a single instance may be shared between
// threads.  The gradient is partitioned as (H_q, H_p, H_lambda, H_lambda_h).
class IndexOneSystem {
 public:
  virtual ~IndexOneSystem() = default;

  virtual DarbouxDims dims() const = 0;
  virtual double hamiltonian(const Vector& z) const = 0;
  virtual Vector gradient(const Vector& z) const = 0;

  // Closed-form solution lambda = lambda~(q, p) of H_lambda = 0, when one is
  // known.  The default reports none and callers fall back to Newton.
  virtual std::optional<Vector> multipliers(const Vector& q, const Vector& p) const;

  // Second derivatives of H, when available analytically.
  virtual std::optional<Matrix> hessian(const Vector& z) const;

  // Holonomic constraints h(q) (length l) and their l x n Jacobian.  The
  // defaults read h from H_lambda_h at (q, 0, 0, 0) and difference it, which
  // is exact for Hamiltonians of the form H0 + sum lambda_h_i h_i(q).
  virtual Vector holonomic_values(const Vector& q) const;
  virtual Matrix holonomic_jacobian(const Vector& q) const;

  PhaseState state(const Vector& z) const { return PhaseState::unpack(dims(), z); }
};

// An IndexOneSystem assembled from callables; the general route for systems
// whose Hamiltonian the caller derives by hand (nonlinear constraints, general
// Lagrangians).
class FunctionSystem final : public IndexOneSystem {
 public:
  using ScalarFn = std::function<double(const Vector&)>;
  using VectorFn = std::function<Vector(const Vector&)>;
  using MultiplierFn = std::function<Vector(const Vector&, const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  FunctionSystem(DarbouxDims dims, ScalarFn hamiltonian, VectorFn gradient,
                 MultiplierFn multipliers = {}, HessianFn hessian = {});

  DarbouxDims dims() const override { return dims_; }
  double hamiltonian(const Vector& z) const override;
  Vector gradient(const Vector& z) const override;
  std::optional<Vector> multipliers(const Vector& q, const Vector& p) const override;
  std::optional<Matrix> hessian(const Vector& z) const override;

 private:
  DarbouxDims dims_;
  ScalarFn hamiltonian_;
  VectorFn gradient_;
  MultiplierFn multipliers_;
  HessianFn hessian_;
};

// Central differences (f(z + h e_i) - f(z - h e_i)) / 2h.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& z,
                                  double h = kDefaultFdStep);

// Column j holds the central difference of F along e_j.
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& z,
                                  double h = kDefaultFdStep);

// LU factorization with partial pivoting.  Throws SingularMatrixError when a
// pivot falls below 1e-14 * ||A||_inf.
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& a);

  Vector solve(const Vector& rhs) const;
  int size() const noexcept { return static_cast<int>(lu_.rows()); }
  double min_pivot() const noexcept { return min_pivot_; }

 private:
  Matrix lu_;
  Eigen::VectorXi perm_;
  double min_pivot_ = 0.0;
};

Vector solve_dense_linear(const Matrix& a, const Vector& rhs);

// H_lambda block of the gradient.
Vector constraint_residual(const IndexOneSystem& system, const Vector& z);
double constraint_residual_norm(const IndexOneSystem& system, const Vector& z);

// dH_lambda/dlambda by central differences of the gradient.
Matrix multiplier_jacobian(const IndexOneSystem& system, const Vector& z, double h = kDefaultFdStep);

// Smallest singular value of dH_lambda/dlambda; +inf when k = 0.
double index_one_margin(const IndexOneSystem& system, const Vector& z, double h = kDefaultFdStep);

struct MultiplierSolveOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double fd_step = kDefaultFdStep;
};

// lambda~(q, p): the analytic map when the system has one, otherwise Newton
// on H_lambda(q, p, lambda, lambda_h) = 0 started from `guess`.
Vector solve_constraint_multipliers(const IndexOneSystem& system, const Vector& q, const Vector& p,
                                    const Vector& guess, const Vector& lambda_h,
                                    const MultiplierSolveOptions& options = {});

// Returns `state` with lambda replaced by lambda~(q, p).
PhaseState place_on_manifold(const IndexOneSystem& system, const PhaseState& state,
                             const MultiplierSolveOptions& options = {});

bool is_on_manifold(const IndexOneSystem& system, const PhaseState& state, double tol);

}  // namespace indexone
