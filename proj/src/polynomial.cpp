#include "safesynth/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace safesynth {

namespace {

void Enumerate(int nvars, int remaining, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == nvars) {
    out.push_back(current);
    return;
  }
  for (int a = 0; a <= remaining; ++a) {
    current.push_back(a);
    Enumerate(nvars, remaining - a, current, out);
    current.pop_back();
  }
}

double MaxAbs(const Box& box, int axis) {
  return std::max(std::abs(box.lower()[axis]), std::abs(box.upper()[axis]));
}

// sup over the box of |∂^order m / ∂x_j^order| for every axis j.
VectorXd AxisDerivativeSup(const Eigen::Ref<const Eigen::VectorXi>& exponent, const Box& box,
                           int order) {
  const int n = static_cast<int>(exponent.size());
  VectorXd sup(n);
  for (int j = 0; j < n; ++j) {
    if (exponent[j] < order) {
      sup[j] = 0.0;
      continue;
    }
    double factor = 1.0;
    for (int s = 0; s < order; ++s) factor *= exponent[j] - s;
    double value = factor;
    for (int i = 0; i < n; ++i) {
      const int power = (i == j) ? exponent[i] - order : exponent[i];
      value *= std::pow(MaxAbs(box, i), power);
    }
    sup[j] = value;
  }
  return sup;
}

}  // namespace

PolyBasis::PolyBasis(int nvars, int degree) : nvars_(nvars), degree_(degree) {
  if (nvars < 1) throw std::invalid_argument("PolyBasis: nvars must be >= 1");
  if (degree < 0) throw std::invalid_argument("PolyBasis: degree must be >= 0");
  std::vector<std::vector<int>> terms;
  std::vector<int> current;
  Enumerate(nvars, degree, current, terms);
  std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    return a < b;
  });
  exponents_.resize(static_cast<Eigen::Index>(terms.size()), nvars);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (int i = 0; i < nvars; ++i) exponents_(static_cast<Eigen::Index>(t), i) = terms[t][i];
  }
}

int PolyBasis::IndexOf(const Eigen::Ref<const Eigen::VectorXi>& exponent) const {
  if (exponent.size() != nvars_) return -1;
  for (int t = 0; t < size(); ++t) {
    if (exponents_.row(t).transpose() == exponent) return t;
  }
  return -1;
}

Polynomial::Polynomial(PolyBasis b, VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {
  if (coeffs.size() != basis.size()) {
    throw std::invalid_argument("Polynomial: coefficient count does not match basis");
  }
}

double EvalPoly(const Polynomial& p, const Eigen::Ref<const VectorXd>& x) {
  return EvalBasis(p.basis, x).dot(p.coeffs);
}

VectorXd EvalPolyColumns(const Polynomial& p, const Eigen::Ref<const MatrixXd>& points) {
  VectorXd values(points.cols());
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    values[k] = EvalBasis(p.basis, points.col(k)).dot(p.coeffs);
  }
  return values;
}

VectorXd MonomialGradientBound(const PolyBasis& basis, const Box& box) {
  if (box.dim() != basis.nvars()) {
    throw std::invalid_argument("MonomialGradientBound: dimension mismatch");
  }
  VectorXd bound(basis.size());
  for (int t = 0; t < basis.size(); ++t) {
    bound[t] = AxisDerivativeSup(basis.exponents().row(t).transpose(), box, 1).maxCoeff();
  }
  return bound;
}

VectorXd MonomialInterpolationBound(const PolyBasis& basis, const Box& box,
                                    const Eigen::Ref<const VectorXd>& spacing) {
  if (box.dim() != basis.nvars() || spacing.size() != basis.nvars()) {
    throw std::invalid_argument("MonomialInterpolationBound: dimension mismatch");
  }
  VectorXd bound(basis.size());
  for (int t = 0; t < basis.size(); ++t) {
    const VectorXd sup = AxisDerivativeSup(basis.exponents().row(t).transpose(), box, 2);
    bound[t] = (spacing.array().square() * sup.array()).sum() / 8.0;
  }
  return bound;
}

VectorXd MonomialNearestNodeBound(const PolyBasis& basis, const Box& box,
                                  const Eigen::Ref<const VectorXd>& spacing) {
  if (box.dim() != basis.nvars() || spacing.size() != basis.nvars()) {
    throw std::invalid_argument("MonomialNearestNodeBound: dimension mismatch");
  }
  VectorXd bound(basis.size());
  for (int t = 0; t < basis.size(); ++t) {
    const VectorXd sup = AxisDerivativeSup(basis.exponents().row(t).transpose(), box, 1);
    bound[t] = (spacing.array() * sup.array()).sum() / 2.0;
  }
  return bound;
}

GramLayout::GramLayout(const PolyBasis& basis)
    : half_(basis.nvars(), (basis.degree() + 1) / 2), counts_(basis.size(), 0) {
  const int h = half_.size();
  rows_.resize(h);
  terms_.assign(h, std::vector<int>(h, -1));
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < h; ++b) {
      const Eigen::VectorXi m = (half_.exponents().row(a) + half_.exponents().row(b)).transpose();
      const int t = basis.IndexOf(m);
      terms_[a][b] = t;
      if (t >= 0) ++counts_[t];
    }
  }
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < h; ++b) {
      const int t = terms_[a][b];
      if (t >= 0) rows_[a].push_back({t, 1.0 / counts_[t]});
    }
  }
}

MatrixXd GramLayout::Matrix(const Eigen::Ref<const VectorXd>& coeffs) const {
  const int h = size();
  MatrixXd g = MatrixXd::Zero(h, h);
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < h; ++b) {
      const int t = terms_[a][b];
      if (t >= 0) g(a, b) = coeffs[t] / counts_[t];
    }
  }
  return g;
}

double GramLayout::MaxRowAbsSum(const Eigen::Ref<const VectorXd>& coeffs) const {
  double best = 0.0;
  for (const auto& r : rows_) {
    double s = 0.0;
    for (const Entry& e : r) s += e.weight * std::abs(coeffs[e.term]);
    best = std::max(best, s);
  }
  return best;
}

VectorXd GramLayout::CoefficientBounds(double bound) const {
  VectorXd out(static_cast<Eigen::Index>(counts_.size()));
  for (std::size_t t = 0; t < counts_.size(); ++t) {
    out[static_cast<Eigen::Index>(t)] = counts_[t] * bound;
  }
  return out;
}

}  // namespace safesynth
