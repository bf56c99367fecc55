#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "safesynth/bounds.hpp"
#include "safesynth/lp_solver.hpp"
#include "safesynth/scp.hpp"

namespace oracle {

/// min cᵀx over {A x <= b} by enumerating every vertex (all n-row subsets).
/// Empty when no vertex is feasible.
std::optional<double> VertexEnumerationMin(const safesynth::RowMatrixXd& A,
                                           const Eigen::VectorXd& b, const Eigen::VectorXd& c);

/// A bounded, feasible LP: `rows` random half-spaces containing the origin
/// plus the cube |x_j| <= 10.
struct RandomLp {
  safesynth::RowMatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};
RandomLp MakeRandomLp(int vars, int rows, std::uint64_t seed);

/// Σ_{i<=m} C(N,i) tⁱ (1-t)^{N-i} in exact rational arithmetic on the exact
/// binary value of t.
double ExactBinomTail(int N, int m, double t);
/// ExactBinomTail for every m = 0..N.
std::vector<double> ExactBinomTailRow(int N, double t);

/// Both sides of the posterior equation summed term by term in long double.
long double DirectPosteriorG(double kappa, const safesynth::PosteriorInputs& in);

/// Root of DirectPosteriorG found by a coarse scan then a fine scan of the
/// bracketing cell.
double DenseKappaScan(const safesynth::PosteriorInputs& in);

/// g3(x, u, d) from std::pow evaluations of the monomials.
double DirectG3(const safesynth::CbfTemplate& tmpl, const Eigen::VectorXd& d,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& x_next);

/// Σ_t coeff_t Π_i x_i^{a_ti} with std::pow.
double DirectPoly(const safesynth::PolyBasis& basis, const Eigen::VectorXd& coeffs,
                  const Eigen::VectorXd& x);

}  // namespace oracle
