#include "indexone/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace indexone {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::evaluation: return "evaluation";
    case ErrorCode::singular_matrix: return "singular_matrix";
    case ErrorCode::rank_deficiency: return "rank_deficiency";
    case ErrorCode::step_failure: return "step_failure";
    case ErrorCode::index_violation: return "index_violation";
    case ErrorCode::projection_failure: return "projection_failure";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

DarbouxDims::DarbouxDims(int n_, int k_, int l_) : n(n_), k(k_), l(l_) {
  if (n < 1 || k < 0 || l < 0) {
    std::ostringstream os;
    os << "invalid Darboux dimensions (n=" << n << ", k=" << k << ", l=" << l << ")";
    throw DimensionError(os.str());
  }
}

PhaseState::PhaseState(Vector q_, Vector p_, Vector lambda_, Vector lambda_h_)
    : q(std::move(q_)), p(std::move(p_)), lambda(std::move(lambda_)), lambda_h(std::move(lambda_h_)) {}

PhaseState PhaseState::zeros(const DarbouxDims& dims) {
  return PhaseState(Vector::Zero(dims.n), Vector::Zero(dims.n), Vector::Zero(dims.k), Vector::Zero(dims.l));
}

PhaseState PhaseState::unpack(const DarbouxDims& dims, const Vector& z) {
  if (z.size() != dims.m()) {
    throw DimensionError("state vector has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(dims.m()));
  }
  return PhaseState(z.segment(dims.q_offset(), dims.n), z.segment(dims.p_offset(), dims.n),
                    z.segment(dims.lambda_offset(), dims.k), z.segment(dims.lambda_h_offset(), dims.l));
}

Vector PhaseState::pack() const {
  Vector z(q.size() + p.size() + lambda.size() + lambda_h.size());
  z << q, p, lambda, lambda_h;
  return z;
}

bool PhaseState::matches(const DarbouxDims& dims) const noexcept {
  return q.size() == dims.n && p.size() == dims.n && lambda.size() == dims.k && lambda_h.size() == dims.l;
}

void PhaseState::check(const DarbouxDims& dims) const {
  if (!matches(dims)) {
    std::ostringstream os;
    os << "state blocks (" << q.size() << ", " << p.size() << ", " << lambda.size() << ", " << lambda_h.size()
       << ") do not match dims (n=" << dims.n << ", k=" << dims.k << ", l=" << dims.l << ")";
    throw DimensionError(os.str());
  }
}

bool PhaseState::all_finite() const noexcept {
  return q.allFinite() && p.allFinite() && lambda.allFinite() && lambda_h.allFinite();
}

Vector StructureMatrix::apply(const Vector& v) const {
  if (v.size() != dims_.m()) throw DimensionError("StructureMatrix::apply: wrong vector length");
  const int n = dims_.n;
  Vector out = Vector::Zero(v.size());
  out.head(n) = -v.segment(n, n);
  out.segment(n, n) = v.head(n);
  return out;
}

Vector StructureMatrix::apply_transpose(const Vector& v) const {
  return -apply(v);
}

Matrix StructureMatrix::dense() const {
  Matrix j = Matrix::Zero(dims_.m(), dims_.m());
  j.topLeftCorner(2 * dims_.n, 2 * dims_.n) = canonical(dims_.n);
  return j;
}

Matrix StructureMatrix::canonical(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  return j;
}

std::optional<Vector> IndexOneSystem::multipliers(const Vector&, const Vector&) const {
  return std::nullopt;
}

std::optional<Matrix> IndexOneSystem::hessian(const Vector&) const {
  return std::nullopt;
}

Vector IndexOneSystem::holonomic_values(const Vector& q) const {
  const DarbouxDims d = dims();
  Vector z = Vector::Zero(d.m());
  z.head(d.n) = q;
  return gradient(z).tail(d.l);
}

Matrix IndexOneSystem::holonomic_jacobian(const Vector& q) const {
  return finite_difference_jacobian([this](const Vector& x) { return holonomic_values(x); }, q);
}

FunctionSystem::FunctionSystem(DarbouxDims dims, ScalarFn hamiltonian, VectorFn gradient,
                               MultiplierFn multipliers, HessianFn hessian)
    : dims_(dims),
      hamiltonian_(std::move(hamiltonian)),
      gradient_(std::move(gradient)),
      multipliers_(std::move(multipliers)),
      hessian_(std::move(hessian)) {
  if (!hamiltonian_ || !gradient_) throw Error(ErrorCode::invalid_argument, "FunctionSystem needs H and grad H");
}

double FunctionSystem::hamiltonian(const Vector& z) const {
  if (z.size() != dims_.m()) throw DimensionError("hamiltonian: wrong state length");
  return hamiltonian_(z);
}

Vector FunctionSystem::gradient(const Vector& z) const {
  if (z.size() != dims_.m()) throw DimensionError("gradient: wrong state length");
  Vector g = gradient_(z);
  if (g.size() != dims_.m()) throw DimensionError("gradient callable returned wrong length");
  return g;
}

std::optional<Vector> FunctionSystem::multipliers(const Vector& q, const Vector& p) const {
  if (!multipliers_) return std::nullopt;
  return multipliers_(q, p);
}

std::optional<Matrix> FunctionSystem::hessian(const Vector& z) const {
  if (!hessian_) return std::nullopt;
  return hessian_(z);
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& z, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "finite-difference step must be positive");
  Vector grad(z.size());
  Vector x = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    x[i] = z[i] + h;
    const double plus = f(x);
    x[i] = z[i] - h;
    const double minus = f(x);
    x[i] = z[i];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw EvaluationError("non-finite function value when perturbing component " + std::to_string(i),
                            static_cast<std::size_t>(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& z, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "finite-difference step must be positive");
  Matrix jac;
  Vector x = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x[j] = z[j] + h;
    const Vector plus = f(x);
    x[j] = z[j] - h;
    const Vector minus = f(x);
    x[j] = z[j];
    if (!plus.allFinite() || !minus.allFinite()) {
      throw EvaluationError("non-finite function value when perturbing component " + std::to_string(j),
                            static_cast<std::size_t>(j));
    }
    if (j == 0) jac.resize(plus.size(), z.size());
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  if (z.size() == 0) jac.resize(f(z).size(), 0);
  return jac;
}

LuFactorization::LuFactorization(const Matrix& a) : lu_(a), perm_(a.rows()) {
  if (a.rows() != a.cols()) throw DimensionError("LU factorization needs a square matrix");
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) perm_[i] = static_cast<int>(i);
  if (n == 0) return;

  const double norm_inf = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double threshold = 1e-14 * norm_inf;
  min_pivot_ = std::numeric_limits<double>::infinity();

  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot_row = col;
    lu_.col(col).tail(n - col).cwiseAbs().maxCoeff(&pivot_row);
    pivot_row += col;
    const double pivot = std::abs(lu_(pivot_row, col));
    min_pivot_ = std::min(min_pivot_, pivot);
    if (!(pivot > threshold) || norm_inf == 0.0) {
      std::ostringstream os;
      os << "matrix is singular to working precision (pivot " << pivot << " in column " << col << ")";
      throw SingularMatrixError(os.str(), pivot);
    }
    if (pivot_row != col) {
      lu_.row(col).swap(lu_.row(pivot_row));
      std::swap(perm_[col], perm_[pivot_row]);
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double factor = lu_(r, col) / lu_(col, col);
      lu_(r, col) = factor;
      lu_.row(r).tail(n - col - 1) -= factor * lu_.row(col).tail(n - col - 1);
    }
  }
}

Vector LuFactorization::solve(const Vector& rhs) const {
  const Eigen::Index n = lu_.rows();
  if (rhs.size() != n) throw DimensionError("LU solve: right-hand side has wrong length");
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
    x[i] /= lu_(i, i);
  }
  return x;
}

Vector solve_dense_linear(const Matrix& a, const Vector& rhs) {
  if (a.rows() != a.cols()) throw DimensionError("solve_dense_linear: matrix is not square");
  const LuFactorization lu(a);
  Vector x = lu.solve(rhs);
  // One step of iterative refinement tightens the residual for mildly
  // ill-conditioned saddle-point blocks.
  const Vector r = rhs - a * x;
  x += lu.solve(r);
  return x;
}

Vector constraint_residual(const IndexOneSystem& system, const Vector& z) {
  const DarbouxDims d = system.dims();
  return system.gradient(z).segment(d.lambda_offset(), d.k);
}

double constraint_residual_norm(const IndexOneSystem& system, const Vector& z) {
  const Vector r = constraint_residual(system, z);
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

Matrix multiplier_jacobian(const IndexOneSystem& system, const Vector& z, double h) {
  const DarbouxDims d = system.dims();
  Matrix jac(d.k, d.k);
  Vector x = z;
  for (int j = 0; j < d.k; ++j) {
    const int idx = d.lambda_offset() + j;
    x[idx] = z[idx] + h;
    const Vector plus = constraint_residual(system, x);
    x[idx] = z[idx] - h;
    const Vector minus = constraint_residual(system, x);
    x[idx] = z[idx];
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

double index_one_margin(const IndexOneSystem& system, const Vector& z, double h) {
  if (system.dims().k == 0) return std::numeric_limits<double>::infinity();
  const Matrix jac = multiplier_jacobian(system, z, h);
  Eigen::JacobiSVD<Matrix> svd(jac);
  return svd.singularValues().minCoeff();
}

Vector solve_constraint_multipliers(const IndexOneSystem& system, const Vector& q, const Vector& p,
                                    const Vector& guess, const Vector& lambda_h,
                                    const MultiplierSolveOptions& options) {
  const DarbouxDims d = system.dims();
  if (d.k == 0) return Vector(0);
  if (auto analytic = system.multipliers(q, p)) {
    if (analytic->size() != d.k) throw DimensionError("analytic multiplier map returned wrong length");
    return *analytic;
  }

  Vector z(d.m());
  z << q, p, guess, lambda_h;
  auto lambda = z.segment(d.lambda_offset(), d.k);
  double residual = constraint_residual_norm(system, z);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (!std::isfinite(residual)) throw EvaluationError("non-finite constraint residual in multiplier solve", {});
    if (residual <= options.tol) {
      // polish with one more correction; keep it only if it helps
      Vector trial = z;
      try {
        const LuFactorization lu(multiplier_jacobian(system, z, options.fd_step));
        trial.segment(d.lambda_offset(), d.k) -= lu.solve(constraint_residual(system, z));
        if (constraint_residual_norm(system, trial) <= residual) z = trial;
      } catch (const SingularMatrixError&) {
      }
      return z.segment(d.lambda_offset(), d.k);
    }
    Matrix jac = multiplier_jacobian(system, z, options.fd_step);
    try {
      const LuFactorization lu(jac);
      lambda -= lu.solve(constraint_residual(system, z));
    } catch (const SingularMatrixError& e) {
      throw IndexViolation(std::string("dH_lambda/dlambda is singular: ") + e.what());
    }
    residual = constraint_residual_norm(system, z);
  }
  if (residual <= options.tol) return lambda;
  throw StepFailure("multiplier Newton iteration did not converge", residual);
}

PhaseState place_on_manifold(const IndexOneSystem& system, const PhaseState& state,
                             const MultiplierSolveOptions& options) {
  const DarbouxDims d = system.dims();
  state.check(d);
  PhaseState out = state;
  out.lambda = solve_constraint_multipliers(system, state.q, state.p, state.lambda, state.lambda_h, options);
  return out;
}

bool is_on_manifold(const IndexOneSystem& system, const PhaseState& state, double tol) {
  return constraint_residual_norm(system, state.pack()) <= tol;
}

}  // namespace indexone
