#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "safesynth/plant.hpp"
#include "safesynth/polynomial.hpp"
#include "safesynth/scp.hpp"

namespace safesynth {

/// Residuals at or below this magnitude are reported as knife edges.
inline constexpr double kKnifeEdge = 1e-12;

struct ViolationRecord {
  long index = 0;
  double residual = 0.0;
  bool violated = false;    // v(k)
  bool knife_edge = false;  // |residual| <= kKnifeEdge
};

struct ViolationSummary {
  long R = 0;
  long knife_edges = 0;
  double max_residual = 0.0;
  std::vector<ViolationRecord> records;
};

/// v(k) = 1 iff g3(x'_k, u'_k, d) > kKnifeEdge. Requires a validation-role
/// dataset.
ViolationSummary ViolationFrequency(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                                    const Dataset& validation);

struct CheckGrids {
  int initial_points = 2001;
  int unsafe_points = 1001;
  int state_points = 401;
  int input_points = 101;
};

struct ConditionResult {
  std::string name;
  double worst_residual = 0.0;
  VectorXd worst_point;  // (x) or (x, u); empty for the level condition
  bool strict = false;   // passes only when worst_residual < 0
  bool passed = false;
  long points = 0;
};

struct ConditionReport {
  /// Initial (B < γ on X0), unsafe (B >= λ on Xu), decrease (step bound on
  /// X×U), level (λ - γ >= cT), and input (C(x) ∈ U on X).
  std::vector<ConditionResult> conditions;
  bool all_passed = false;

  const ConditionResult& at(const std::string& name) const;
};

/// Worst residual of each barrier condition over dense grids, using the
/// true plant for the decrease condition.
ConditionReport CheckCbfConditions(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                                   System& truth, const CheckGrids& grids = {});

struct Trajectory {
  MatrixXd states;  // n × (T+1)
  MatrixXd inputs;  // m × T, after clamping
  bool safe = true;
  int clamp_events = 0;
  bool started_outside_initial = false;
};

/// x(t+1) = f(x(t), C(x(t))) with C clamped to the input box.
Trajectory SimulateClosedLoop(System& plant, const std::vector<Polynomial>& controller,
                              const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& x0,
                              int horizon);

struct SafetySummary {
  double fraction_safe = 0.0;
  double min_distance_to_unsafe = 0.0;
  long trajectories = 0;
  long clamp_events = 0;
  std::vector<VectorXd> failing_initial_states;
};

SafetySummary EmpiricalSafety(System& plant, const std::vector<Polynomial>& controller,
                              const CbfTemplate& tmpl, const Eigen::Ref<const MatrixXd>& x0_grid,
                              int horizon);

struct PlotGrids {
  int state_points = 401;
  int input_points = 101;
};

struct PlotFiles {
  std::filesystem::path barrier;     // x,B,gamma,lambda
  std::filesystem::path controller;  // x,C
  std::filesystem::path g3_surface;  // x,u,g3
};

/// Writes the barrier curve, the controller and the g3 surface over X×U as
/// CSV into `dir`. Multi-dimensional states get columns x1..xn, u1..um.
PlotFiles EmitPlotData(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                       System& truth, const std::filesystem::path& dir,
                       const PlotGrids& grids = {});

}  // namespace safesynth
