#include "safesynth/scp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace safesynth {

DecisionLayout::DecisionLayout(int barrier_terms, std::vector<int> controller_terms)
    : q_size_(barrier_terms), p_sizes_(std::move(controller_terms)), p_total_(0) {
  if (q_size_ < 1) throw std::invalid_argument("DecisionLayout: empty barrier basis");
  if (p_sizes_.empty()) throw std::invalid_argument("DecisionLayout: no controller");
  for (int s : p_sizes_) {
    if (s < 1) throw std::invalid_argument("DecisionLayout: empty controller basis");
    p_offsets_.push_back(4 + q_size_ + p_total_);
    p_total_ += s;
  }
}

std::string ToString(RowTag tag) {
  switch (tag) {
    case RowTag::kG1: return "g1";
    case RowTag::kG2: return "g2";
    case RowTag::kG3: return "g3";
    case RowTag::kG4: return "g4";
    case RowTag::kStructural: return "structural";
  }
  return "unknown";
}

DecisionLayout CbfTemplate::layout() const {
  std::vector<int> sizes;
  for (const auto& b : controller_bases) sizes.push_back(b.size());
  return DecisionLayout(barrier_basis.size(), std::move(sizes));
}

void CbfTemplate::Validate() const {
  const int n = state_dim();
  const int m = input_dim();
  if (n < 1) throw std::invalid_argument("state box X is empty");
  if (m < 1) throw std::invalid_argument("input box U is empty");
  if (initial_set.parts().empty() || initial_set.dim() != n) {
    throw std::invalid_argument("initial set X0 must be a non-empty union of boxes in X's dimension");
  }
  if (unsafe_set.parts().empty() || unsafe_set.dim() != n) {
    throw std::invalid_argument("unsafe set Xu must be a non-empty union of boxes in X's dimension");
  }
  if (!initial_set.SubsetOf(state_box)) throw std::invalid_argument("X0 must lie inside X");
  if (!unsafe_set.SubsetOf(state_box)) throw std::invalid_argument("Xu must lie inside X");
  if (initial_set.Intersects(unsafe_set)) {
    throw std::invalid_argument("X0 and Xu must be disjoint");
  }
  if (input_A.cols() != m || input_A.rows() != input_b.size() || input_A.rows() < 1) {
    throw std::invalid_argument("input polytope A u <= b: A must be r x m with r = len(b) >= 1");
  }
  if (horizon < 1) throw std::invalid_argument("horizon T must be >= 1");
  if (barrier_basis.nvars() != n) throw std::invalid_argument("barrier basis must be over the state");
  if (static_cast<int>(controller_bases.size()) != m) {
    throw std::invalid_argument("need one controller basis per input");
  }
  for (const auto& b : controller_bases) {
    if (b.nvars() != n) throw std::invalid_argument("controller basis must be over the state");
  }
  if (!(barrier_norm_bound > 0.0) || !(controller_norm_bound > 0.0)) {
    throw std::invalid_argument("coefficient norm bounds must be positive");
  }
}

double GridTightening(const PolyBasis& basis, const Box& box, int points_per_axis,
                      const Eigen::Ref<const VectorXd>& coeff_bounds) {
  const VectorXd h = GridSpacing(box, points_per_axis);
  const double first = MonomialNearestNodeBound(basis, box, h).dot(coeff_bounds);
  const double second = MonomialInterpolationBound(basis, box, h).dot(coeff_bounds);
  return std::min(first, second);
}

RowBlock AssembleG1(const Eigen::Ref<const MatrixXd>& grid, const PolyBasis& basis,
                    const DecisionLayout& layout, double margin, double tighten) {
  if (grid.cols() == 0) throw std::invalid_argument("AssembleG1: empty grid");
  RowBlock block;
  block.tag = RowTag::kG1;
  block.coeffs = RowMatrixXd::Zero(grid.cols(), layout.size());
  block.rhs = VectorXd::Constant(grid.cols(), -margin - tighten);
  for (Eigen::Index k = 0; k < grid.cols(); ++k) {
    block.coeffs.row(k).segment(layout.q_offset(), basis.size()) =
        EvalBasis(basis, grid.col(k)).transpose();
    block.coeffs(k, DecisionLayout::kGamma) = -1.0;
    block.origin.push_back(k);
  }
  return block;
}

RowBlock AssembleG2(const Eigen::Ref<const MatrixXd>& grid, const PolyBasis& basis,
                    const DecisionLayout& layout, double tighten) {
  if (grid.cols() == 0) throw std::invalid_argument("AssembleG2: empty grid");
  RowBlock block;
  block.tag = RowTag::kG2;
  block.coeffs = RowMatrixXd::Zero(grid.cols(), layout.size());
  block.rhs = VectorXd::Constant(grid.cols(), -tighten);
  for (Eigen::Index k = 0; k < grid.cols(); ++k) {
    block.coeffs.row(k).segment(layout.q_offset(), basis.size()) =
        -EvalBasis(basis, grid.col(k)).transpose();
    block.coeffs(k, DecisionLayout::kLambda) = 1.0;
    block.origin.push_back(k);
  }
  return block;
}

void AssembleG3(const Sample& sample, const PolyBasis& barrier,
                const std::vector<PolyBasis>& controllers, const DecisionLayout& layout,
                Eigen::Ref<Eigen::RowVectorXd> coeffs, double* rhs) {
  if (sample.x.size() != barrier.nvars() || sample.x_next.size() != barrier.nvars() ||
      sample.u.size() != static_cast<Eigen::Index>(controllers.size()) ||
      coeffs.size() != layout.size()) {
    throw std::invalid_argument("AssembleG3: sample dimensions do not match the template");
  }
  coeffs.setZero();
  coeffs.segment(layout.q_offset(), barrier.size()) =
      (EvalBasis(barrier, sample.x_next) - EvalBasis(barrier, sample.x)).transpose();
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    coeffs.segment(layout.p_offset(static_cast<int>(i)), controllers[i].size()) =
        -EvalBasis(controllers[i], sample.x).transpose();
  }
  coeffs[DecisionLayout::kC] = -1.0;
  coeffs[DecisionLayout::kK] = -1.0;
  *rhs = -sample.u.sum();
}

RowBlock AssembleG3(const Dataset& data, const PolyBasis& barrier,
                    const std::vector<PolyBasis>& controllers, const DecisionLayout& layout) {
  RowBlock block;
  block.tag = RowTag::kG3;
  block.coeffs.resize(data.size(), layout.size());
  block.rhs.resize(data.size());
  block.origin.resize(data.size());
  for (int k = 0; k < data.size(); ++k) {
    AssembleG3(data.sample(k), barrier, controllers, layout, block.coeffs.row(k), &block.rhs[k]);
    block.origin[k] = k;
  }
  return block;
}

RowBlock AssembleG4(const Eigen::Ref<const MatrixXd>& grid, const MatrixXd& input_A,
                    const VectorXd& input_b, const std::vector<PolyBasis>& controllers,
                    const DecisionLayout& layout, const Eigen::Ref<const VectorXd>& tighten) {
  const Eigen::Index r = input_A.rows();
  if (input_A.cols() != static_cast<Eigen::Index>(controllers.size()) || input_b.size() != r ||
      tighten.size() != r) {
    throw std::invalid_argument("AssembleG4: dimension mismatch");
  }
  if (grid.cols() == 0) throw std::invalid_argument("AssembleG4: empty grid");
  RowBlock block;
  block.tag = RowTag::kG4;
  block.coeffs = RowMatrixXd::Zero(grid.cols() * r, layout.size());
  block.rhs.resize(grid.cols() * r);
  for (Eigen::Index k = 0; k < grid.cols(); ++k) {
    std::vector<VectorXd> values;
    for (const auto& b : controllers) values.push_back(EvalBasis(b, grid.col(k)));
    for (Eigen::Index i = 0; i < r; ++i) {
      const Eigen::Index row = k * r + i;
      for (std::size_t j = 0; j < controllers.size(); ++j) {
        block.coeffs.row(row).segment(layout.p_offset(static_cast<int>(j)), controllers[j].size()) =
            input_A(i, static_cast<Eigen::Index>(j)) * values[j].transpose();
      }
      block.rhs[row] = input_b[i] - tighten[i];
      block.origin.push_back(k);
    }
  }
  return block;
}

namespace {

// |coeff| <= s and Σ_b w_b s_b <= bound for every Gram row.
void AppendMagnitudeRows(const PolyBasis& basis, int value_offset, int magnitude_offset,
                         double bound, int width, std::vector<Eigen::RowVectorXd>& rows,
                         std::vector<double>& rhs) {
  for (int t = 0; t < basis.size(); ++t) {
    for (double sign : {1.0, -1.0}) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(width);
      row[value_offset + t] = sign;
      row[magnitude_offset + t] = -1.0;
      rows.push_back(row);
      rhs.push_back(0.0);
    }
  }
  const GramLayout gram(basis);
  for (int a = 0; a < gram.size(); ++a) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(width);
    for (const auto& e : gram.row(a)) row[magnitude_offset + e.term] += e.weight;
    rows.push_back(row);
    rhs.push_back(bound);
  }
}

}  // namespace

RowBlock AssembleStructural(const CbfTemplate& tmpl, const DecisionLayout& layout) {
  if (tmpl.horizon < 1) throw std::invalid_argument("AssembleStructural: T must be >= 1");
  const int w = layout.size();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;

  Eigen::RowVectorXd level = Eigen::RowVectorXd::Zero(w);
  level[DecisionLayout::kLambda] = -1.0;
  level[DecisionLayout::kGamma] = 1.0;
  level[DecisionLayout::kC] = tmpl.horizon;
  rows.push_back(level);
  rhs.push_back(0.0);

  Eigen::RowVectorXd c_sign = Eigen::RowVectorXd::Zero(w);
  c_sign[DecisionLayout::kC] = -1.0;
  rows.push_back(c_sign);
  rhs.push_back(0.0);

  AppendMagnitudeRows(tmpl.barrier_basis, layout.q_offset(), layout.q_magnitude_offset(),
                      tmpl.barrier_norm_bound, w, rows, rhs);
  for (int i = 0; i < layout.inputs(); ++i) {
    AppendMagnitudeRows(tmpl.controller_bases[i], layout.p_offset(i), layout.p_magnitude_offset(i),
                        tmpl.controller_norm_bound, w, rows, rhs);
  }

  RowBlock block;
  block.tag = RowTag::kStructural;
  block.coeffs.resize(static_cast<Eigen::Index>(rows.size()), w);
  block.rhs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    block.coeffs.row(static_cast<Eigen::Index>(k)) = rows[k];
    block.rhs[static_cast<Eigen::Index>(k)] = rhs[k];
    block.origin.push_back(static_cast<long>(k));
  }
  return block;
}

void LpProblem::Append(const RowBlock& block) {
  if (block.coeffs.cols() != layout.size()) {
    throw std::invalid_argument("LpProblem::Append: row width does not match the layout");
  }
  const Eigen::Index old = rhs.size();
  coeffs.conservativeResize(old + block.rows(), layout.size());
  coeffs.bottomRows(block.rows()) = block.coeffs;
  rhs.conservativeResize(old + block.rows());
  rhs.tail(block.rows()) = block.rhs;
  tags.insert(tags.end(), block.rows(), block.tag);
  origins.insert(origins.end(), block.origin.begin(), block.origin.end());
}

VectorXd LpProblem::Objective() const {
  VectorXd c = VectorXd::Zero(layout.size());
  c[DecisionLayout::kK] = 1.0;
  return c;
}

int LpProblem::CountTag(RowTag tag) const {
  return static_cast<int>(std::count(tags.begin(), tags.end(), tag));
}

LpProblem BuildScp(const CbfTemplate& tmpl, const Dataset& scenario, const GridSettings& grid) {
  tmpl.Validate();
  if (scenario.size() < 1) throw std::invalid_argument("BuildScp: scenario dataset is empty");
  if (scenario.state_dim() != tmpl.state_dim() || scenario.input_dim() != tmpl.input_dim()) {
    throw std::invalid_argument("BuildScp: dataset dimensions do not match the template");
  }
  const DecisionLayout layout = tmpl.layout();
  LpProblem problem(layout);
  const VectorXd q_bounds = GramLayout(tmpl.barrier_basis).CoefficientBounds(tmpl.barrier_norm_bound);

  for (const Box& part : tmpl.initial_set.parts()) {
    const double t = grid.tighten
                         ? GridTightening(tmpl.barrier_basis, part, grid.initial_points, q_bounds)
                         : 0.0;
    problem.g1_tightening = std::max(problem.g1_tightening, t);
    problem.Append(AssembleG1(TensorGrid(part, grid.initial_points), tmpl.barrier_basis, layout,
                              grid.strict_margin, t));
  }
  for (const Box& part : tmpl.unsafe_set.parts()) {
    const double t = grid.tighten
                         ? GridTightening(tmpl.barrier_basis, part, grid.unsafe_points, q_bounds)
                         : 0.0;
    problem.g2_tightening = std::max(problem.g2_tightening, t);
    problem.Append(AssembleG2(TensorGrid(part, grid.unsafe_points), tmpl.barrier_basis, layout, t));
  }

  problem.Append(AssembleG3(scenario, tmpl.barrier_basis, tmpl.controller_bases, layout));

  VectorXd g4_tighten = VectorXd::Zero(tmpl.input_A.rows());
  if (grid.tighten) {
    for (int j = 0; j < tmpl.input_dim(); ++j) {
      const VectorXd bounds =
          GramLayout(tmpl.controller_bases[j]).CoefficientBounds(tmpl.controller_norm_bound);
      const double t =
          GridTightening(tmpl.controller_bases[j], tmpl.state_box, grid.state_points, bounds);
      g4_tighten += tmpl.input_A.col(j).cwiseAbs() * t;
    }
  }
  problem.g4_tightening = g4_tighten.size() ? g4_tighten.maxCoeff() : 0.0;
  problem.Append(AssembleG4(TensorGrid(tmpl.state_box, grid.state_points), tmpl.input_A,
                            tmpl.input_b, tmpl.controller_bases, layout, g4_tighten));

  problem.Append(AssembleStructural(tmpl, layout));
  return problem;
}

void DumpTableau(const LpProblem& problem, std::ostream& out) {
  char buf[64];
  for (int r = 0; r < problem.rows(); ++r) {
    out << ToString(problem.tags[r]) << ' ' << problem.origins[r];
    std::snprintf(buf, sizeof(buf), " %.17g", problem.rhs[r]);
    out << buf;
    for (int j = 0; j < problem.layout.size(); ++j) {
      const double v = problem.coeffs(r, j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof(buf), " %d:%.17g", j, v);
      out << buf;
    }
    out << '\n';
  }
}

namespace {

// Restores λ - γ >= cT and c >= 0 exactly, then sets K to the smallest value
// the g3 rows allow for the remaining variables.
void Polish(const LpProblem& problem, int horizon, VectorXd& d) {
  double& c = d[DecisionLayout::kC];
  c = std::clamp(c, 0.0, std::max(0.0, (d[DecisionLayout::kLambda] - d[DecisionLayout::kGamma]) /
                                           horizon));
  double k_min = -std::numeric_limits<double>::infinity();
  VectorXd rest = d;
  rest[DecisionLayout::kK] = 0.0;
  for (int r = 0; r < problem.rows(); ++r) {
    if (problem.tags[r] != RowTag::kG3) continue;
    k_min = std::max(k_min, problem.coeffs.row(r).dot(rest) - problem.rhs[r]);
  }
  d[DecisionLayout::kK] = k_min;
}

int HorizonOf(const LpProblem& problem) {
  // The level row carries T as its c coefficient.
  for (int r = 0; r < problem.rows(); ++r) {
    if (problem.tags[r] == RowTag::kStructural && problem.origins[r] == 0) {
      return std::max(1, static_cast<int>(std::lround(problem.coeffs(r, DecisionLayout::kC))));
    }
  }
  return 1;
}

}  // namespace

LpSolution SolveScp(const LpProblem& problem, const ScpTolerances& tol) {
  if (problem.CountTag(RowTag::kG3) < 1) {
    throw std::invalid_argument("SolveScp: problem has no g3 rows");
  }
  LpOptions options;
  options.feasibility_tol = tol.feasibility;
  options.optimality_tol = tol.optimality;
  DenseLpSolver<double> solver(problem.coeffs, problem.rhs, options);
  const VectorXd objective = problem.Objective();

  LpResult result;
  LpSolution sol;
  if (tol.lexicographic) {
    std::vector<int> order(problem.layout.core_size() - 1);
    std::iota(order.begin(), order.end(), 1);
    result = MinimizeLexicographic(solver, objective, order, &sol.tie_break_stages);
  } else {
    result = solver.Minimize(objective);
  }
  sol.status = result.status;
  sol.iterations = result.iterations;
  sol.degenerate = result.degenerate;
  sol.message = result.message;
  if (result.status != LpStatus::kOptimal) return sol;

  sol.d_star = result.x;
  Polish(problem, HorizonOf(problem), sol.d_star);
  sol.objective = sol.K();

  const VectorXd residual = problem.coeffs * sol.d_star - problem.rhs;
  sol.max_violation = std::max(0.0, residual.maxCoeff());
  for (int r = 0; r < problem.rows(); ++r) {
    if (std::abs(residual[r]) <= tol.activity) sol.active_rows.push_back(r);
  }
  if (sol.degenerate) {
    std::string w = "degenerate optimal basis: the optimum may not be unique";
    if (tol.lexicographic) {
      w += " (tie-break ran " + std::to_string(sol.tie_break_stages) + " of " +
           std::to_string(problem.layout.core_size() - 1) + " stages)";
    }
    sol.warnings.push_back(w);
  }
  if (sol.max_violation > tol.feasibility) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max row violation %.3g exceeds feasibility tolerance",
                  sol.max_violation);
    sol.warnings.push_back(buf);
  }
  return sol;
}

int CountActiveG3(const LpProblem& problem, const LpSolution& solution, double tol) {
  if (solution.status != LpStatus::kOptimal) {
    throw std::invalid_argument("CountActiveG3: solution is not optimal");
  }
  int count = 0;
  for (int r = 0; r < problem.rows(); ++r) {
    if (problem.tags[r] != RowTag::kG3) continue;
    if (std::abs(problem.coeffs.row(r).dot(solution.d_star) - problem.rhs[r]) <= tol) ++count;
  }
  return count;
}

int ExactSupportCount(const LpProblem& problem, const LpSolution& solution, double tol) {
  if (solution.status != LpStatus::kOptimal) {
    throw std::invalid_argument("ExactSupportCount: solution is not optimal");
  }
  const VectorXd objective = problem.Objective();
  int count = 0;
  RowMatrixXd reduced(problem.rows() - 1, problem.layout.size());
  VectorXd reduced_rhs(problem.rows() - 1);
  for (int skip = 0; skip < problem.rows(); ++skip) {
    if (problem.tags[skip] != RowTag::kG3) continue;
    reduced.topRows(skip) = problem.coeffs.topRows(skip);
    reduced.bottomRows(problem.rows() - 1 - skip) = problem.coeffs.bottomRows(problem.rows() - 1 - skip);
    reduced_rhs.head(skip) = problem.rhs.head(skip);
    reduced_rhs.tail(problem.rows() - 1 - skip) = problem.rhs.tail(problem.rows() - 1 - skip);
    DenseLpSolver<double> solver(reduced, reduced_rhs);
    const LpResult r = solver.Minimize(objective);
    // Removing the row can only relax the program; an unbounded relaxation
    // is an improvement too.
    if (r.status == LpStatus::kUnbounded ||
        (r.status == LpStatus::kOptimal && r.objective < solution.objective - tol)) {
      ++count;
    }
  }
  return count;
}

Polynomial BarrierOf(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d) {
  const DecisionLayout layout = tmpl.layout();
  return Polynomial(tmpl.barrier_basis, d.segment(layout.q_offset(), layout.barrier_terms()));
}

std::vector<Polynomial> ControllerOf(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d) {
  const DecisionLayout layout = tmpl.layout();
  std::vector<Polynomial> out;
  for (int i = 0; i < layout.inputs(); ++i) {
    out.emplace_back(tmpl.controller_bases[i],
                     d.segment(layout.p_offset(i), layout.controller_terms(i)));
  }
  return out;
}

double G3Residual(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                  const Sample& sample) {
  const Polynomial barrier = BarrierOf(tmpl, d);
  const std::vector<Polynomial> controllers = ControllerOf(tmpl, d);
  double value = barrier(sample.x_next) - barrier(sample.x);
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    value += sample.u[static_cast<Eigen::Index>(i)] - controllers[i](sample.x);
  }
  return value - d[DecisionLayout::kC] - d[DecisionLayout::kK];
}

}  // namespace safesynth
