#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "safesynth/verify.hpp"

using namespace safesynth;
namespace fs = std::filesystem;

namespace {

// Printed room-temperature solution: K, λ, γ, c, q0..q4, p0..p4.
VectorXd PrintedRoomDecision() {
  VectorXd d(14);
  d << -0.149, -68.14, -69.64, 0.2998, 0.0, 1.948e-3, 0.2395, -0.03838, 9.730e-4, 2.643e-5, 0.09858,
      -0.002051, -5.278e-5, 1.643e-6;
  return d;
}

std::vector<Polynomial> ConstantController(double u) {
  VectorXd c = VectorXd::Zero(5);
  c[0] = u;
  return {Polynomial(PolyBasis(1, 4), c)};
}

int CountLines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

Dataset SingleSampleValidation(double x, double u, double xn) {
  Dataset d;
  d.states = MatrixXd::Constant(1, 1, x);
  d.inputs = MatrixXd::Constant(1, 1, u);
  d.next_states = MatrixXd::Constant(1, 1, xn);
  d.role = DatasetRole::kValidation;
  return d;
}

}  // namespace

TEST(Verify, ViolationFrequencyCounts) {
  const CbfTemplate t = fixtures::RoomTemplate();
  VectorXd d = VectorXd::Zero(t.layout().core_size());
  d[DecisionLayout::kK] = 0.0;
  // With q = p = 0, c = 0: g3 = u - K, so u = 0.5 violates when K = 0.
  const Dataset one = SingleSampleValidation(24.0, 0.5, 24.0);
  EXPECT_EQ(ViolationFrequency(t, d, one).R, 1);
  d[DecisionLayout::kK] = 1.0;
  EXPECT_EQ(ViolationFrequency(t, d, one).R, 0);
  d[DecisionLayout::kK] = 0.5;
  const ViolationSummary edge = ViolationFrequency(t, d, one);
  EXPECT_EQ(edge.R, 0);
  EXPECT_EQ(edge.knife_edges, 1);
  Dataset scenario = one;
  scenario.role = DatasetRole::kScenario;
  EXPECT_THROW(ViolationFrequency(t, d, scenario), std::invalid_argument);
}

TEST(Verify, SelfValidationGivesZeroViolations) {
  const CbfTemplate tmpl = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  Dataset data = Collect(sys, tmpl.sample_space(), 3000, 21);
  const LpSolution s = SolveScp(BuildScp(tmpl, data, fixtures::CoarseGrid()));
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  data.role = DatasetRole::kValidation;
  const ViolationSummary a = ViolationFrequency(tmpl, s.d_star, data);
  const ViolationSummary b = ViolationFrequency(tmpl, s.d_star, data);
  EXPECT_EQ(a.R, 0);
  EXPECT_EQ(a.R, b.R);
  EXPECT_EQ(a.max_residual, b.max_residual);
}

TEST(Verify, LevelConditionOnPrintedValues) {
  const VectorXd d = PrintedRoomDecision();
  EXPECT_NEAR(d[1] - d[2] - 5 * d[3], 0.001, 1e-9);
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  CheckGrids grids;
  grids.state_points = 101;
  grids.input_points = 21;
  const ConditionReport r = CheckCbfConditions(t, d, sys, grids);
  EXPECT_TRUE(r.at("level").passed);
  EXPECT_NEAR(r.at("level").worst_residual, -0.001, 1e-9);
  // Four printed digits push the controller about 1.2e-4 above u = 1.
  EXPECT_FALSE(r.at("input").passed);
  EXPECT_LT(r.at("input").worst_residual, 2e-4);
  EXPECT_THROW(r.at("nonexistent"), std::out_of_range);
}

TEST(Verify, TrajectoryOfZeroInputLeavesSafeBand) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const Trajectory traj = SimulateClosedLoop(sys, ConstantController(0.0), t, VectorXd::Constant(1, 24.0), 5);
  ASSERT_EQ(traj.states.cols(), 6);
  double x = 24.0;
  for (int k = 0; k <= 5; ++k) {
    EXPECT_NEAR(traj.states(0, k), x, 1e-12);
    x = 15.0 + 0.96 * (x - 15.0);
  }
  EXPECT_NEAR(traj.states(0, 3), 22.962624, 1e-9);
  EXPECT_FALSE(traj.safe);
}

TEST(Verify, ZeroHorizon) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const Trajectory in = SimulateClosedLoop(sys, ConstantController(0.0), t, VectorXd::Constant(1, 24.5), 0);
  EXPECT_EQ(in.states.cols(), 1);
  EXPECT_TRUE(in.safe);
  const Trajectory out = SimulateClosedLoop(sys, ConstantController(0.0), t, VectorXd::Constant(1, 22.7), 0);
  EXPECT_FALSE(out.safe);
  EXPECT_TRUE(out.started_outside_initial);
}

TEST(Verify, ClampingCounted) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const Trajectory traj = SimulateClosedLoop(sys, ConstantController(3.0), t, VectorXd::Constant(1, 24.5), 4);
  EXPECT_EQ(traj.clamp_events, 4);
  EXPECT_TRUE((traj.inputs.array() == 1.0).all());
}

TEST(Verify, PrintedControllerIsSafe) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const VectorXd d = PrintedRoomDecision();
  const Trajectory traj = SimulateClosedLoop(sys, ControllerOf(t, d), t, VectorXd::Constant(1, 24.5), 5);
  EXPECT_TRUE(traj.safe);
  EXPECT_GE(traj.states.minCoeff(), 23.0);
  EXPECT_LE(traj.states.maxCoeff(), 26.0);
  const SafetySummary s = EmpiricalSafety(sys, ControllerOf(t, d), t, TensorGrid(t.initial_set, 401), 5);
  EXPECT_EQ(s.fraction_safe, 1.0);
  EXPECT_TRUE(s.failing_initial_states.empty());
  EXPECT_EQ(s.trajectories, 401);
}

TEST(Verify, UnsafeControllerDetected) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const SafetySummary s = EmpiricalSafety(sys, ConstantController(0.0), t, TensorGrid(t.initial_set, 401), 5);
  EXPECT_LT(s.fraction_safe, 1.0);
  EXPECT_FALSE(s.failing_initial_states.empty());
}

TEST(Verify, PlotFiles) {
  const CbfTemplate t = fixtures::RoomTemplate();
  RoomTemperatureSystem sys;
  const fs::path dir = fs::temp_directory_path() / "safesynth_tests" / "plots";
  PlotGrids g;
  g.state_points = 41;
  g.input_points = 11;
  const VectorXd d = PrintedRoomDecision();
  const PlotFiles f = EmitPlotData(t, d, sys, dir, g);
  std::ifstream in(f.barrier);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,B,gamma,lambda");
  EXPECT_EQ(CountLines(f.barrier), 42);
  EXPECT_EQ(CountLines(f.g3_surface), 41 * 11 + 1);
  std::ifstream a(f.g3_surface);
  const std::string before((std::istreambuf_iterator<char>(a)), {});
  EmitPlotData(t, d, sys, dir, g);
  std::ifstream b(f.g3_surface);
  EXPECT_EQ(before, std::string((std::istreambuf_iterator<char>(b)), {}));
  // The barrier curve sits below γ on X0 and above λ on Xu.
  const Polynomial B = BarrierOf(t, d);
  EXPECT_LT(EvalPoly(B, VectorXd::Constant(1, 24.5)), d[2]);
  EXPECT_GT(EvalPoly(B, VectorXd::Constant(1, 22.5)), d[1]);
}
