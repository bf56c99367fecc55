#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "safesynth/scp.hpp"

using namespace safesynth;

namespace {

VectorXd RandomDecision(const DecisionLayout& layout, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  VectorXd d = VectorXd::NullaryExpr(layout.size(), [&] { return N(rng); });
  return d;
}

/// min K over a handful of g3 rows `-K <= -a` with every other variable pinned to 0.
LpProblem MaxOfListProblem(const std::vector<double>& a) {
  LpProblem p(DecisionLayout(1, {1}));
  const int n = p.layout.size();
  RowBlock g3;
  g3.tag = RowTag::kG3;
  g3.coeffs = RowMatrixXd::Zero(static_cast<int>(a.size()), n);
  g3.rhs.resize(static_cast<int>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) {
    g3.coeffs(i, DecisionLayout::kK) = -1.0;
    g3.rhs[i] = -a[i];
    g3.origin.push_back(static_cast<long>(i));
  }
  p.Append(g3);
  RowBlock pin;
  pin.tag = RowTag::kStructural;
  pin.coeffs = RowMatrixXd::Zero(2 * (n - 1), n);
  pin.rhs = VectorXd::Zero(2 * (n - 1));
  for (int j = 1; j < n; ++j) {
    pin.coeffs(2 * (j - 1), j) = 1.0;
    pin.coeffs(2 * (j - 1) + 1, j) = -1.0;
    pin.origin.push_back(j);
    pin.origin.push_back(j);
  }
  p.Append(pin);
  return p;
}

}  // namespace

TEST(Scp, LayoutSizes) {
  const DecisionLayout l(5, {5});
  EXPECT_EQ(l.core_size(), 14);
  EXPECT_EQ(l.size(), 24);
  EXPECT_EQ(l.q_offset(), 4);
  EXPECT_EQ(l.p_offset(0), 9);
  EXPECT_EQ(l.q_magnitude_offset(), 14);
  EXPECT_EQ(l.p_magnitude_offset(0), 19);
}

TEST(Scp, G1Transcription) {
  const PolyBasis b(1, 2);
  const DecisionLayout l(3, {1});
  MatrixXd grid(1, 2);
  grid << 24.0, 25.0;
  const RowBlock r = AssembleG1(grid, b, l, 1e-6, 0.01);
  ASSERT_EQ(r.rows(), 2);
  EXPECT_EQ(r.tag, RowTag::kG1);
  EXPECT_EQ(r.coeffs(1, DecisionLayout::kGamma), -1.0);
  EXPECT_EQ(r.coeffs.row(1).segment(4, 3), Eigen::RowVector3d(1, 25, 625));
  EXPECT_EQ(r.coeffs(1, DecisionLayout::kK), 0.0);
  EXPECT_NEAR(r.rhs[0], -1e-6 - 0.01, 1e-18);
  // Zero margin and tightening: B(x) = γ makes the row exactly active.
  const RowBlock z = AssembleG1(grid, b, l, 0.0, 0.0);
  VectorXd d = VectorXd::Zero(l.size());
  d.segment(4, 3) << 1.0, 0.0, 0.0;
  d[DecisionLayout::kGamma] = 1.0;
  EXPECT_EQ(z.coeffs.row(0).dot(d) - z.rhs[0], 0.0);
}

TEST(Scp, G2Transcription) {
  const PolyBasis b(1, 1);
  const DecisionLayout l(2, {1});
  MatrixXd grid(1, 1);
  grid << 22.7;
  const RowBlock r = AssembleG2(grid, b, l, 0.5);
  EXPECT_EQ(r.coeffs(0, DecisionLayout::kLambda), 1.0);
  EXPECT_EQ(r.coeffs.row(0).segment(4, 2), Eigen::RowVector2d(-1, -22.7));
  EXPECT_EQ(r.rhs[0], -0.5);
  // Zero polynomial with λ = 0: the row reads 0 <= -0.5.
  EXPECT_GT(r.coeffs.row(0).dot(VectorXd::Zero(l.size())) - r.rhs[0], 0.0);
}

TEST(Scp, G3HandTranscription) {
  const PolyBasis b(1, 1);
  const DecisionLayout l(2, {2});
  Eigen::RowVectorXd row(l.size());
  double rhs = 0.0;
  const Sample s{VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 2.0)};
  AssembleG3(s, b, {b}, l, row, &rhs);
  EXPECT_EQ(row.segment(4, 2), Eigen::RowVector2d(0, 1));
  EXPECT_EQ(row.segment(6, 2), Eigen::RowVector2d(-1, -1));
  EXPECT_EQ(row[DecisionLayout::kC], -1.0);
  EXPECT_EQ(row[DecisionLayout::kK], -1.0);
  EXPECT_EQ(row[DecisionLayout::kLambda], 0.0);
  EXPECT_EQ(rhs, -0.5);
  // x = x' cancels the barrier part.
  const Sample still{VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 3.0)};
  AssembleG3(still, b, {b}, l, row, &rhs);
  EXPECT_TRUE(row.segment(4, 2).isZero());
}

TEST(Scp, G3MatchesDirectEvaluation) {
  std::mt19937_64 rng(2024);
  for (const CbfTemplate& tmpl : {fixtures::RoomTemplate(), fixtures::PlanarTemplate()}) {
    const DecisionLayout l = tmpl.layout();
    const Box space = tmpl.state_box.Product(tmpl.input_box);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const VectorXd d = RandomDecision(l, rng);
      const VectorXd z = SampleUniformAt(space, 99, trial);
      const int n = tmpl.state_dim();
      const VectorXd x = z.head(n);
      const VectorXd u = z.tail(tmpl.input_dim());
      const VectorXd xn = x + 0.1 * VectorXd::NullaryExpr(n, [&] { return U(rng) - 0.5; });
      Eigen::RowVectorXd row(l.size());
      double rhs = 0.0;
      AssembleG3({x, u, xn}, tmpl.barrier_basis, tmpl.controller_bases, l, row, &rhs);
      const double direct = oracle::DirectG3(tmpl, d, x, u, xn);
      EXPECT_NEAR(row.dot(d) - rhs, direct, 1e-10 * std::max(1.0, std::abs(direct)));
      EXPECT_NEAR(G3Residual(tmpl, d, {x, u, xn}), direct, 1e-10 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Scp, G4Rows) {
  const PolyBasis b(1, 1);
  const DecisionLayout l(2, {2});
  MatrixXd A(2, 1);
  A << 1, -1;
  VectorXd bv(2);
  bv << 1, 0;
  MatrixXd grid(1, 3);
  grid << 22.5, 24.5, 26.5;
  const RowBlock r = AssembleG4(grid, A, bv, {b}, l, VectorXd::Constant(2, 0.01));
  ASSERT_EQ(r.rows(), 6);
  EXPECT_EQ(r.coeffs.row(0).segment(6, 2), Eigen::RowVector2d(1, 22.5));
  EXPECT_EQ(r.coeffs.row(1).segment(6, 2), Eigen::RowVector2d(-1, -22.5));
  EXPECT_NEAR(r.rhs[0], 0.99, 1e-15);
  EXPECT_NEAR(r.rhs[1], -0.01, 1e-15);
  // Zero controller satisfies every row iff b_i >= tightening.
  const VectorXd zero = VectorXd::Zero(l.size());
  EXPECT_LE((r.coeffs * zero - r.rhs)(0), 0.0);
  EXPECT_GT((r.coeffs * zero - r.rhs)(1), 0.0);
}

TEST(Scp, StructuralRows) {
  const CbfTemplate t = fixtures::RoomTemplate();
  const DecisionLayout l = t.layout();
  const RowBlock r = AssembleStructural(t, l);
  // Level row: -λ + γ + cT <= 0.
  EXPECT_EQ(r.coeffs(0, DecisionLayout::kLambda), -1.0);
  EXPECT_EQ(r.coeffs(0, DecisionLayout::kGamma), 1.0);
  EXPECT_EQ(r.coeffs(0, DecisionLayout::kC), 5.0);
  EXPECT_EQ(r.rhs[0], 0.0);
  VectorXd d = VectorXd::Zero(l.size());
  d[DecisionLayout::kLambda] = d[DecisionLayout::kGamma] = 2.0;
  EXPECT_EQ(r.coeffs.row(0).dot(d), 0.0);
  // c >= 0.
  EXPECT_EQ(r.coeffs(1, DecisionLayout::kC), -1.0);
  // Any decision satisfying every structural row has Gram row sums within bounds.
  const GramLayout gram(t.barrier_basis);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-0.1, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd z = VectorXd::Zero(l.size());
    for (int i = 0; i < l.barrier_terms(); ++i) z[l.q_offset() + i] = U(rng);
    z.segment(l.q_magnitude_offset(), l.barrier_terms()) =
        z.segment(l.q_offset(), l.barrier_terms()).cwiseAbs();
    const bool feasible = ((r.coeffs * z - r.rhs).array() <= 1e-15).all();
    if (feasible) EXPECT_LE(gram.MaxRowAbsSum(z.segment(l.q_offset(), l.barrier_terms())), 0.1 + 1e-12);
  }
}

TEST(Scp, TemplateValidation) {
  CbfTemplate t = fixtures::RoomTemplate();
  EXPECT_NO_THROW(t.Validate());
  t.unsafe_set = RegionUnion(Box(VectorXd::Constant(1, 24.5), VectorXd::Constant(1, 26.0)));
  try {
    t.Validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("disjoint"), std::string::npos);
  }
}

TEST(Scp, SolveMaxOfList) {
  const LpProblem p = MaxOfListProblem({-3, -1, -2});
  const LpSolution s = SolveScp(p);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.K(), -1.0, 1e-12);
  EXPECT_EQ(CountActiveG3(p, s, 1e-7), 1);
}

TEST(Scp, ExactSupportCountSmallCases) {
  const LpProblem two = MaxOfListProblem({-1, -2});
  EXPECT_EQ(ExactSupportCount(two, SolveScp(two)), 1);
  const LpProblem dup = MaxOfListProblem({-1, -1, -2});
  const LpSolution s = SolveScp(dup);
  EXPECT_EQ(ExactSupportCount(dup, s), 0);
  EXPECT_EQ(CountActiveG3(dup, s, 1e-7), 2);
}

TEST(Scp, DumpTableauOneLinePerRow) {
  const LpProblem p = MaxOfListProblem({-1, -2});
  std::ostringstream out;
  DumpTableau(p, out);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), p.rows());
  EXPECT_EQ(text.rfind("g3 0 ", 0), 0u);
}

TEST(Scp, ActiveCountBoundsSupportCountOnSmallPrograms) {
  const CbfTemplate tmpl = fixtures::RoomTemplate(2, 1);
  RoomTemperatureSystem sys;
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset data = Collect(sys, tmpl.sample_space(), 25, 500 + trial);
    const LpProblem p = BuildScp(tmpl, data, fixtures::CoarseGrid());
    const LpSolution s = SolveScp(p);
    ASSERT_EQ(s.status, LpStatus::kOptimal) << trial;
    const int active = CountActiveG3(p, s, 1e-7);
    const int exact = ExactSupportCount(p, s);
    EXPECT_GE(active, exact) << "trial " << trial;
    EXPECT_LE(exact, tmpl.layout().core_size()) << "trial " << trial;
  }
}

TEST(Scp, AddingSamplesNeverLowersOptimum) {
  const CbfTemplate tmpl = fixtures::RoomTemplate(2, 1);
  RoomTemperatureSystem sys;
  const Dataset all = Collect(sys, tmpl.sample_space(), 400, 17);
  double prev = -std::numeric_limits<double>::infinity();
  for (int n : {25, 50, 100, 200, 400}) {
    Dataset sub = all;
    sub.states = all.states.leftCols(n);
    sub.inputs = all.inputs.leftCols(n);
    sub.next_states = all.next_states.leftCols(n);
    const LpSolution s = SolveScp(BuildScp(tmpl, sub, fixtures::CoarseGrid()));
    ASSERT_EQ(s.status, LpStatus::kOptimal);
    EXPECT_GE(s.K(), prev - 1e-8);
    prev = s.K();
  }
}

TEST(Scp, ReducedProgramReproducesOptimum) {
  const CbfTemplate tmpl = fixtures::RoomTemplate(2, 1);
  RoomTemperatureSystem sys;
  const Dataset data = Collect(sys, tmpl.sample_space(), 300, 8);
  const LpProblem p = BuildScp(tmpl, data, fixtures::CoarseGrid());
  const LpSolution s = SolveScp(p);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  // Keep every non-g3 row and only the active g3 rows.
  LpProblem reduced(p.layout);
  for (int r = 0; r < p.rows(); ++r) {
    const bool active = std::find(s.active_rows.begin(), s.active_rows.end(), r) != s.active_rows.end();
    if (p.tags[r] == RowTag::kG3 && !active) continue;
    RowBlock one;
    one.tag = p.tags[r];
    one.coeffs = p.coeffs.row(r);
    one.rhs = VectorXd::Constant(1, p.rhs[r]);
    one.origin = {p.origins[r]};
    reduced.Append(one);
  }
  EXPECT_NEAR(SolveScp(reduced).K(), s.K(), 1e-8);
}

TEST(Scp, SolutionFeasibleAndDeterministic) {
  const CbfTemplate tmpl = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const Dataset data = Collect(sys, tmpl.sample_space(), 2000, 4);
  const LpProblem p = BuildScp(tmpl, data, fixtures::CoarseGrid());
  const LpSolution a = SolveScp(p);
  const LpSolution b = SolveScp(p);
  ASSERT_EQ(a.status, LpStatus::kOptimal);
  EXPECT_LE(a.max_violation, 1e-8);
  EXPECT_TRUE((a.d_star.array() == b.d_star.array()).all());
  for (int r : a.active_rows) EXPECT_LE(std::abs(p.coeffs.row(r).dot(a.d_star) - p.rhs[r]), 1e-7);
}

TEST(Scp, GridTighteningShrinksWithResolution) {
  const PolyBasis b(1, 4);
  const Box x0(VectorXd::Constant(1, 24.0), VectorXd::Constant(1, 25.0));
  const VectorXd bounds = GramLayout(b).CoefficientBounds(0.1);
  const double coarse = GridTightening(b, x0, 101, bounds);
  const double fine = GridTightening(b, x0, 1001, bounds);
  EXPECT_GT(coarse, fine);
  EXPECT_GT(fine, 0.0);
  // Sound: the bound covers the actual gap between a polynomial and its
  // interpolant at the worst coefficients tried.
  const VectorXd q = bounds;
  const double h = 1.0 / 100;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = 24.0 + i * h;
    const double fa = EvalPoly(Polynomial(b, q), VectorXd::Constant(1, a));
    const double fb = EvalPoly(Polynomial(b, q), VectorXd::Constant(1, a + h));
    for (int j = 1; j < 10; ++j) {
      const double x = a + h * j / 10.0;
      const double interp = fa + (fb - fa) * j / 10.0;
      worst = std::max(worst, std::abs(EvalPoly(Polynomial(b, q), VectorXd::Constant(1, x)) - interp));
    }
  }
  EXPECT_LE(worst, coarse);
}
