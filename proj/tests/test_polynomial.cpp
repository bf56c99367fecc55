#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "safesynth/polynomial.hpp"

using namespace safesynth;

namespace {

long Choose(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

VectorXd Point(double v) { return VectorXd::Constant(1, v); }

// Quartic barrier and controller from the room-temperature study, as printed
// (coefficients of x^0..x^4).
const VectorXd kRoomBarrier = (VectorXd(5) << 0.0, 1.948e-3, 0.2395, -0.03838, 9.730e-4).finished();
const VectorXd kRoomController =
    (VectorXd(5) << 2.643e-5, 0.09858, -0.002051, -5.278e-5, 1.643e-6).finished();

}  // namespace

TEST(Polynomial, BasisSizes) {
  EXPECT_EQ(PolyBasis(1, 4).size(), 5);
  EXPECT_EQ(PolyBasis(1, 0).size(), 1);
  EXPECT_EQ(PolyBasis(2, 2).size(), 6);
  for (int n = 1; n <= 4; ++n) {
    for (int k = 0; k <= 6; ++k) EXPECT_EQ(PolyBasis(n, k).size(), Choose(n + k, k)) << n << "," << k;
  }
}

TEST(Polynomial, BasisOrderCanonical) {
  const PolyBasis b(2, 2);
  const Eigen::MatrixXi expected =
      (Eigen::MatrixXi(6, 2) << 0, 0, 0, 1, 1, 0, 0, 2, 1, 1, 2, 0).finished();
  EXPECT_EQ(b.exponents(), expected);
  for (int t = 1; t < b.size(); ++t) EXPECT_GE(b.TotalDegree(t), b.TotalDegree(t - 1));
  EXPECT_EQ(b.IndexOf(Eigen::Vector2i(1, 1)), 4);
  EXPECT_EQ(b.IndexOf(Eigen::Vector2i(3, 0)), -1);
  EXPECT_TRUE(PolyBasis(2, 2).exponents() == b.exponents());
}

TEST(Polynomial, EvalBasisUnivariate) {
  const PolyBasis b(1, 4);
  EXPECT_EQ(EvalBasis(b, Point(0.0)), (VectorXd(5) << 1, 0, 0, 0, 0).finished());
  EXPECT_EQ(EvalBasis(b, Point(2.0)), (VectorXd(5) << 1, 2, 4, 8, 16).finished());
  EXPECT_THROW(EvalBasis(b, VectorXd::Zero(2)), std::invalid_argument);
}

TEST(Polynomial, EvalBasisMatchesPowerOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const PolyBasis b(3, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = VectorXd::NullaryExpr(3, [&] { return U(rng); });
    const VectorXd v = EvalBasis(b, x);
    for (int t = 0; t < b.size(); ++t) {
      const VectorXd e = VectorXd::Unit(b.size(), t);
      const double expect = oracle::DirectPoly(b, e, x);
      EXPECT_NEAR(v[t], expect, 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST(Polynomial, EvalIsLinearInCoefficients) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  const PolyBasis b(2, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd p = VectorXd::NullaryExpr(b.size(), [&] { return N(rng); });
    const VectorXd r = VectorXd::NullaryExpr(b.size(), [&] { return N(rng); });
    const VectorXd x = VectorXd::NullaryExpr(2, [&] { return N(rng); });
    const double a = N(rng), c = N(rng);
    const double lhs = EvalPoly(Polynomial(b, a * p + c * r), x);
    const double rhs = a * EvalPoly(Polynomial(b, p), x) + c * EvalPoly(Polynomial(b, r), x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(Polynomial, RoomPolynomials) {
  const PolyBasis b(1, 4);
  EXPECT_EQ(EvalPoly(Polynomial::Zero(b), Point(3.0)), 0.0);
  EXPECT_EQ(EvalPoly(Polynomial(b, kRoomBarrier), Point(0.0)), 0.0);
  const double u = EvalPoly(Polynomial(b, kRoomController), Point(25.0));
  EXPECT_GE(u, 0.0);
  EXPECT_LE(u, 1.0);
}

TEST(Polynomial, GradientBounds) {
  const PolyBasis b(1, 3);
  const Box unit(Point(0.0), Point(2.0));
  const VectorXd g = MonomialGradientBound(b, unit);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 4.0);
  const VectorXd room = MonomialGradientBound(b, Box(Point(22.5), Point(26.5)));
  EXPECT_DOUBLE_EQ(room[3], 3 * 26.5 * 26.5);
  // Sign-changing interval: sup |3x²| on [-3, 1] is 27.
  EXPECT_DOUBLE_EQ(MonomialGradientBound(b, Box(Point(-3.0), Point(1.0)))[3], 27.0);
}

TEST(Polynomial, GramLayoutQuartic) {
  const PolyBasis b(1, 4);
  const GramLayout g(b);
  const VectorXd q = (VectorXd(5) << 1, 2, 3, 4, 5).finished();
  const MatrixXd expected =
      (MatrixXd(3, 3) << 1, 1, 1, 1, 1, 2, 1, 2, 5).finished();
  EXPECT_TRUE(g.Matrix(q).isApprox(expected));
  EXPECT_DOUBLE_EQ(g.MaxRowAbsSum(q), 8.0);
  const MatrixXd m = g.Matrix(kRoomBarrier);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), g.MaxRowAbsSum(kRoomBarrier) + 1e-15);
}
