#include "safesynth/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "safesynth/io.hpp"

namespace safesynth {

ViolationSummary ViolationFrequency(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                                    const Dataset& validation) {
  if (validation.role != DatasetRole::kValidation) {
    throw std::invalid_argument("ViolationFrequency: dataset role must be validation");
  }
  const DecisionLayout layout = tmpl.layout();
  if (d.size() < layout.core_size()) {
    throw std::invalid_argument("ViolationFrequency: decision vector too short");
  }
  VectorXd full = VectorXd::Zero(layout.size());
  full.head(layout.core_size()) = d.head(layout.core_size());

  ViolationSummary out;
  out.max_residual = -std::numeric_limits<double>::infinity();
  out.records.reserve(validation.size());
  Eigen::RowVectorXd row(layout.size());
  for (int k = 0; k < validation.size(); ++k) {
    double rhs = 0.0;
    AssembleG3(validation.sample(k), tmpl.barrier_basis, tmpl.controller_bases, layout, row, &rhs);
    ViolationRecord rec;
    rec.index = k;
    rec.residual = row.dot(full) - rhs;
    rec.knife_edge = std::abs(rec.residual) <= kKnifeEdge;
    rec.violated = rec.residual > kKnifeEdge;
    out.R += rec.violated;
    out.knife_edges += rec.knife_edge;
    out.max_residual = std::max(out.max_residual, rec.residual);
    out.records.push_back(rec);
  }
  return out;
}

const ConditionResult& ConditionReport::at(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no condition named " + name);
}

namespace {

void Consider(ConditionResult& r, double residual, const Eigen::Ref<const VectorXd>& point) {
  ++r.points;
  if (r.points == 1 || residual > r.worst_residual) {
    r.worst_residual = residual;
    r.worst_point = point;
  }
}

void Finish(ConditionResult& r) {
  r.passed = r.strict ? r.worst_residual < 0.0 : r.worst_residual <= 0.0;
}

}  // namespace

ConditionReport CheckCbfConditions(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                                   System& truth, const CheckGrids& grids) {
  const Polynomial barrier = BarrierOf(tmpl, d);
  const std::vector<Polynomial> controller = ControllerOf(tmpl, d);
  const double lambda = d[DecisionLayout::kLambda];
  const double gamma = d[DecisionLayout::kGamma];
  const double c = d[DecisionLayout::kC];
  const int n = tmpl.state_dim();
  const int m = tmpl.input_dim();

  ConditionResult initial;
  initial.name = "initial";
  initial.strict = true;
  const MatrixXd x0 = TensorGrid(tmpl.initial_set, grids.initial_points);
  for (Eigen::Index k = 0; k < x0.cols(); ++k) Consider(initial, barrier(x0.col(k)) - gamma, x0.col(k));

  ConditionResult unsafe;
  unsafe.name = "unsafe";
  const MatrixXd xu = TensorGrid(tmpl.unsafe_set, grids.unsafe_points);
  for (Eigen::Index k = 0; k < xu.cols(); ++k) Consider(unsafe, lambda - barrier(xu.col(k)), xu.col(k));

  ConditionResult decrease;
  decrease.name = "decrease";
  ConditionResult input;
  input.name = "input";
  const MatrixXd xs = TensorGrid(tmpl.state_box, grids.state_points);
  const MatrixXd us = TensorGrid(tmpl.input_box, grids.input_points);
  VectorXd point(n + m);
  VectorXd cx(m);
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    const VectorXd x = xs.col(i);
    const double bx = barrier(x);
    double feedback = 0.0;
    for (int j = 0; j < m; ++j) {
      cx[j] = controller[j](x);
      feedback += cx[j];
    }
    Consider(input, (tmpl.input_A * cx - tmpl.input_b).maxCoeff(), x);
    for (Eigen::Index k = 0; k < us.cols(); ++k) {
      const VectorXd u = us.col(k);
      const double value = barrier(truth.Step(x, u)) + u.sum() - feedback - bx - c;
      point << x, u;
      Consider(decrease, value, point);
    }
  }

  ConditionResult level;
  level.name = "level";
  level.worst_residual = gamma + c * tmpl.horizon - lambda;
  level.points = 1;

  ConditionReport report;
  report.conditions = {initial, unsafe, decrease, level, input};
  report.all_passed = true;
  for (auto& r : report.conditions) {
    Finish(r);
    report.all_passed = report.all_passed && r.passed;
  }
  return report;
}

Trajectory SimulateClosedLoop(System& plant, const std::vector<Polynomial>& controller,
                              const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& x0,
                              int horizon) {
  if (horizon < 0) throw std::invalid_argument("SimulateClosedLoop: horizon must be >= 0");
  const int n = tmpl.state_dim();
  const int m = tmpl.input_dim();
  if (x0.size() != n || static_cast<int>(controller.size()) != m) {
    throw std::invalid_argument("SimulateClosedLoop: dimension mismatch");
  }
  Trajectory traj;
  traj.states.resize(n, horizon + 1);
  traj.inputs.resize(m, horizon);
  traj.states.col(0) = x0;
  traj.started_outside_initial = !tmpl.initial_set.Contains(x0);
  traj.safe = !tmpl.unsafe_set.Contains(x0);
  VectorXd u(m);
  for (int t = 0; t < horizon; ++t) {
    const VectorXd x = traj.states.col(t);
    for (int j = 0; j < m; ++j) {
      const double raw = controller[j](x);
      u[j] = std::clamp(raw, tmpl.input_box.lower()[j], tmpl.input_box.upper()[j]);
      if (u[j] != raw) ++traj.clamp_events;
    }
    traj.inputs.col(t) = u;
    traj.states.col(t + 1) = plant.Step(x, u);
    if (tmpl.unsafe_set.Contains(traj.states.col(t + 1))) traj.safe = false;
  }
  return traj;
}

SafetySummary EmpiricalSafety(System& plant, const std::vector<Polynomial>& controller,
                              const CbfTemplate& tmpl, const Eigen::Ref<const MatrixXd>& x0_grid,
                              int horizon) {
  SafetySummary out;
  out.min_distance_to_unsafe = std::numeric_limits<double>::infinity();
  long safe = 0;
  for (Eigen::Index k = 0; k < x0_grid.cols(); ++k) {
    const Trajectory traj = SimulateClosedLoop(plant, controller, tmpl, x0_grid.col(k), horizon);
    ++out.trajectories;
    out.clamp_events += traj.clamp_events;
    if (traj.safe) {
      ++safe;
    } else {
      out.failing_initial_states.push_back(x0_grid.col(k));
    }
    for (Eigen::Index t = 0; t < traj.states.cols(); ++t) {
      out.min_distance_to_unsafe =
          std::min(out.min_distance_to_unsafe, tmpl.unsafe_set.Distance(traj.states.col(t)));
    }
  }
  out.fraction_safe = out.trajectories ? static_cast<double>(safe) / out.trajectories : 0.0;
  return out;
}

namespace {

std::string Header(const char* prefix, int count) {
  if (count == 1) return prefix;
  std::string h;
  for (int i = 1; i <= count; ++i) h += (i > 1 ? "," : "") + std::string(prefix) + std::to_string(i);
  return h;
}

void PutRow(std::ostringstream& out, std::initializer_list<Eigen::Ref<const VectorXd>> parts) {
  bool first = true;
  for (const auto& p : parts) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      out << (first ? "" : ",") << FormatExact(p[i]);
      first = false;
    }
  }
  out << '\n';
}

}  // namespace

PlotFiles EmitPlotData(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                       System& truth, const std::filesystem::path& dir, const PlotGrids& grids) {
  const Polynomial barrier = BarrierOf(tmpl, d);
  const std::vector<Polynomial> controller = ControllerOf(tmpl, d);
  const int n = tmpl.state_dim();
  const int m = tmpl.input_dim();
  const double c = d[DecisionLayout::kC];
  const MatrixXd xs = TensorGrid(tmpl.state_box, grids.state_points);
  const MatrixXd us = TensorGrid(tmpl.input_box, grids.input_points);

  PlotFiles files{dir / "barrier.csv", dir / "controller.csv", dir / "g3_surface.csv"};
  std::ostringstream b, ctl, g3;
  b << Header("x", n) << ",B,gamma,lambda\n";
  ctl << Header("x", n) << ',' << Header("C", m) << '\n';
  g3 << Header("x", n) << ',' << Header("u", m) << ",g3\n";
  VectorXd tail(3);
  VectorXd cx(m);
  VectorXd one(1);
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    const VectorXd x = xs.col(i);
    const double bx = barrier(x);
    tail << bx, d[DecisionLayout::kGamma], d[DecisionLayout::kLambda];
    PutRow(b, {x, tail});
    for (int j = 0; j < m; ++j) cx[j] = controller[j](x);
    PutRow(ctl, {x, cx});
    for (Eigen::Index k = 0; k < us.cols(); ++k) {
      const VectorXd u = us.col(k);
      one[0] = barrier(truth.Step(x, u)) - bx + u.sum() - cx.sum() - c - d[DecisionLayout::kK];
      PutRow(g3, {x, u, one});
    }
  }
  WriteFileAtomic(files.barrier, b.str());
  WriteFileAtomic(files.controller, ctl.str());
  WriteFileAtomic(files.g3_surface, g3.str());
  return files;
}

}  // namespace safesynth
