#pragma once

#include <vector>

#include <Eigen/Core>

#include "safesynth/geometry.hpp"

namespace safesynth {

/// Monomials x^a with total degree |a| <= degree, ordered by total degree
/// and then lexicographically on the exponent tuple.
class PolyBasis {
 public:
  PolyBasis() = default;
  PolyBasis(int nvars, int degree);

  int nvars() const { return nvars_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.rows()); }
  /// size() × nvars() exponent table; row t is the multi-degree of term t.
  const Eigen::MatrixXi& exponents() const { return exponents_; }
  int TotalDegree(int term) const { return exponents_.row(term).sum(); }
  /// Index of a multi-degree, or -1 when absent.
  int IndexOf(const Eigen::Ref<const Eigen::VectorXi>& exponent) const;

  bool operator==(const PolyBasis& other) const {
    return nvars_ == other.nvars_ && degree_ == other.degree_;
  }

 private:
  int nvars_ = 0;
  int degree_ = 0;
  Eigen::MatrixXi exponents_;
};

/// Monomial values at x in basis order.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> EvalBasis(
    const PolyBasis& basis, const Eigen::MatrixBase<Derived>& x);

/// Coefficient vector over a basis.
struct Polynomial {
  PolyBasis basis;
  VectorXd coeffs;

  Polynomial() = default;
  Polynomial(PolyBasis b, VectorXd c);
  static Polynomial Zero(const PolyBasis& b) { return {b, VectorXd::Zero(b.size())}; }

  template <typename Derived>
  typename Derived::Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return EvalBasis(basis, x).dot(coeffs.cast<typename Derived::Scalar>());
  }
};

double EvalPoly(const Polynomial& p, const Eigen::Ref<const VectorXd>& x);

/// Values of p at every column of `points`.
VectorXd EvalPolyColumns(const Polynomial& p, const Eigen::Ref<const MatrixXd>& points);

/// Per term: sup over the box of |∂m/∂x_j|, maximised over j.
VectorXd MonomialGradientBound(const PolyBasis& basis, const Box& box);

/// Per term: sum over axes of h_j²/8 · sup|∂²m/∂x_j²| on the box. This is
/// the multilinear interpolation error of the monomial on a grid with
/// spacing h.
VectorXd MonomialInterpolationBound(const PolyBasis& basis, const Box& box,
                                    const Eigen::Ref<const VectorXd>& spacing);

/// Per term: sum over axes of h_j/2 · sup|∂m/∂x_j| on the box, i.e. the
/// nearest-node error of the monomial on a grid with spacing h.
VectorXd MonomialNearestNodeBound(const PolyBasis& basis, const Box& box,
                                  const Eigen::Ref<const VectorXd>& spacing);

/// Symmetric Gram matrix G over the half basis z (total degree
/// <= ceil(k/2)) with p(x) = z(x)ᵀ G z(x): the entry for the pair (a, b)
/// is coeff[m] / count(m), m = z_a z_b, and zero when deg m > k. For the
/// univariate quartic this is [[q0, q1/2, q2/3], [q1/2, q2/3, q3/2],
/// [q2/3, q3/2, q4]].
class GramLayout {
 public:
  struct Entry {
    int term;
    double weight;
  };

  explicit GramLayout(const PolyBasis& basis);

  int size() const { return static_cast<int>(rows_.size()); }
  /// Entries of Gram row a; each term appears at most once per row.
  const std::vector<Entry>& row(int a) const { return rows_[a]; }
  /// Number of Gram entries that carry term t.
  int count(int term) const { return counts_[term]; }

  MatrixXd Matrix(const Eigen::Ref<const VectorXd>& coeffs) const;
  /// max_a Σ_b |G_ab|, which dominates the spectral norm of symmetric G.
  double MaxRowAbsSum(const Eigen::Ref<const VectorXd>& coeffs) const;
  /// Largest |coeff_t| allowed by MaxRowAbsSum <= bound: count(t) · bound.
  VectorXd CoefficientBounds(double bound) const;

 private:
  PolyBasis half_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<std::vector<int>> terms_;  // per row, term index per column (-1 if none)
  std::vector<int> counts_;
};

// ---------------------------------------------------------------------------

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> EvalBasis(
    const PolyBasis& basis, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != basis.nvars()) {
    throw std::invalid_argument("EvalBasis: dimension mismatch");
  }
  const int n = basis.nvars();
  const int k = basis.degree();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> powers(n, k + 1);
  for (int i = 0; i < n; ++i) {
    powers(i, 0) = Scalar(1);
    for (int a = 1; a <= k; ++a) powers(i, a) = powers(i, a - 1) * x(i);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values(basis.size());
  const Eigen::MatrixXi& e = basis.exponents();
  for (int t = 0; t < basis.size(); ++t) {
    Scalar v(1);
    for (int i = 0; i < n; ++i) v *= powers(i, e(t, i));
    values[t] = v;
  }
  return values;
}

}  // namespace safesynth
