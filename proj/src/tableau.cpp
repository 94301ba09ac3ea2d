#include <cmath>
#include <string>

#include "indexone/integrators.hpp"

namespace indexone {

void ButcherTableau::validate() const {
  const auto s = b.size();
  if (s < 1) throw Error(ErrorCode::invalid_argument, "tableau needs at least one stage");
  if (a.rows() != s || a.cols() != s || c.size() != s) {
    throw DimensionError("tableau '" + name + "' has inconsistent shapes");
  }
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "tableau '" + name + "' has non-finite coefficients");
  }
}

ButcherTableau gauss_tableau(int s) {
  ButcherTableau t;
  switch (s) {
    case 1:
      t.name = "midpoint";
      t.a = Matrix::Constant(1, 1, 0.5);
      t.b = Vector::Constant(1, 1.0);
      t.c = Vector::Constant(1, 0.5);
      break;
    case 2: {
      const double r3 = std::sqrt(3.0);
      t.name = "gauss2";
      t.a.resize(2, 2);
      t.a << 0.25, 0.25 - r3 / 6.0,
             0.25 + r3 / 6.0, 0.25;
      t.b.resize(2);
      t.b << 0.5, 0.5;
      t.c.resize(2);
      t.c << 0.5 - r3 / 6.0, 0.5 + r3 / 6.0;
      break;
    }
    case 3: {
      const double r15 = std::sqrt(15.0);
      t.name = "gauss3";
      t.a.resize(3, 3);
      t.a << 5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0,
             5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0,
             5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0;
      t.b.resize(3);
      t.b << 5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0;
      t.c.resize(3);
      t.c << 0.5 - r15 / 10.0, 0.5, 0.5 + r15 / 10.0;
      break;
    }
    default:
      throw Error(ErrorCode::invalid_argument, "unsupported Gauss stage count " + std::to_string(s));
  }
  return t;
}

ButcherTableau explicit_euler_tableau() {
  ButcherTableau t;
  t.name = "explicit-euler";
  t.a = Matrix::Zero(1, 1);
  t.b = Vector::Constant(1, 1.0);
  t.c = Vector::Zero(1);
  return t;
}

ButcherTableau tableau_by_name(std::string_view name) {
  if (name == "midpoint" || name == "gauss1") return gauss_tableau(1);
  if (name == "gauss2") return gauss_tableau(2);
  if (name == "gauss3") return gauss_tableau(3);
  if (name == "explicit-euler") return explicit_euler_tableau();
  throw Error(ErrorCode::invalid_argument, "unknown tableau '" + std::string(name) + "'");
}

double symplecticity_residual(const ButcherTableau& tableau) {
  tableau.validate();
  const int s = tableau.stages();
  double worst = 0.0;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      const double r = tableau.b[i] * tableau.b[j] - tableau.b[j] * tableau.a(j, i) - tableau.b[i] * tableau.a(i, j);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

double row_sum_residual(const ButcherTableau& tableau) {
  tableau.validate();
  return (tableau.a.rowwise().sum() - tableau.c).cwiseAbs().maxCoeff();
}

}  // namespace indexone
