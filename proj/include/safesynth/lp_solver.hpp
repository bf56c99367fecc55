#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace safesynth {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string ToString(LpStatus status);

struct LpOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-8;
  double pivot_tol = 1e-10;
  /// Largest scaled violation accepted for a row that admits no pivot.
  double acceptance_tol = 1e-5;
  int max_iterations = 200000;
  int refactor_interval = 50;
  /// Non-improving pivots tolerated before switching to Bland's rule.
  int stall_limit = 30;
};

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Constraint rows in the final basis and their multipliers (>= 0).
  std::vector<int> basis_rows;
  std::vector<double> multipliers;
  int iterations = 0;
  /// Some basic multiplier is zero, so the optimum may not be unique.
  bool degenerate = false;
  std::string message;
};

/// Dense active-set solver for
///
///   minimize cᵀx  subject to  A x <= b,  x free,
///
/// aimed at tall problems (few columns, very many rows). It runs a two-phase
/// revised primal simplex on the dual program
///
///   minimize bᵀy  subject to  Aᵀy = -c,  y >= 0,
///
/// whose basis is a set of n active rows of A and whose simplex multipliers
/// are the primal point x. Each pivot brings the most violated row into the
/// active set. Rows and columns are equilibrated internally. Basis algebra
/// runs in `Scalar`; pricing runs in double.
///
/// `A` is referenced, not copied, and must outlive the solver.
template <typename Scalar = double>
class DenseLpSolver {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  DenseLpSolver(const RowMatrixXd& A, const Eigen::VectorXd& b, LpOptions options = {})
      : A_(A), b_(b), options_(options) {
    if (A_.rows() != b_.size()) throw std::invalid_argument("DenseLpSolver: A/b size mismatch");
    n_ = static_cast<int>(A_.cols());
    col_scale_ = Eigen::VectorXd::Ones(n_);
    for (int i = 0; i < n_; ++i) {
      const double m = A_.col(i).cwiseAbs().maxCoeff();
      if (m > 0.0) col_scale_[i] = 1.0 / m;
    }
    row_scale_.resize(A_.rows());
    for (Eigen::Index j = 0; j < A_.rows(); ++j) {
      const double m = (A_.row(j).transpose().cwiseProduct(col_scale_)).cwiseAbs().maxCoeff();
      row_scale_[j] = (m > 0.0) ? 1.0 / m : 1.0;
    }
  }

  int num_rows() const { return static_cast<int>(A_.rows() + extra_.size()); }
  int num_cols() const { return n_; }

  /// Appends aᵀx <= rhs without touching A.
  void AddRow(const Eigen::VectorXd& a, double rhs) {
    if (a.size() != n_) throw std::invalid_argument("DenseLpSolver::AddRow: size mismatch");
    const double m = a.cwiseProduct(col_scale_).cwiseAbs().maxCoeff();
    extra_.push_back({a, rhs, (m > 0.0) ? 1.0 / m : 1.0});
  }

  LpResult Minimize(const Eigen::VectorXd& c);

 private:
  struct ExtraRow {
    Eigen::VectorXd a;
    double rhs;
    double scale;
  };

  double Rhs(int j) const { return j < A_.rows() ? b_[j] : extra_[j - A_.rows()].rhs; }
  double RowScale(int j) const {
    return j < A_.rows() ? row_scale_[j] : extra_[j - A_.rows()].scale;
  }
  double ScaledRhs(int j) const { return RowScale(j) * Rhs(j); }
  Vec ScaledColumn(int j) const;
  Vec BasisColumn(int k) const;
  /// dot[j] = (scaled row j)·pi for every row.
  Eigen::VectorXd ScaledProducts(const Vec& pi) const;
  void Refactor();
  bool Pivot(int entering, bool phase_one, bool bland, bool* improved);
  LpStatus RunPhase(bool phase_one, int* iterations, std::string* message);
  void DriveOutArtificials();

  const RowMatrixXd& A_;
  const Eigen::VectorXd& b_;
  LpOptions options_;

 public:
  LpOptions& options() { return options_; }
  /// Largest violation of the original rows at x.
  double MaxViolation(const Eigen::VectorXd& x) const {
    return A_.rows() == 0 ? 0.0 : std::max(0.0, (A_ * x - b_).maxCoeff());
  }

 private:
  int n_ = 0;
  Eigen::VectorXd col_scale_;
  Eigen::VectorXd row_scale_;
  std::vector<ExtraRow> extra_;

  // Basis: entries >= 0 are rows; entry -(i+1) is the artificial of equation i.
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  Vec rhs_;          // -c scaled
  Vec artificial_sign_;
  Mat binv_;
  Vec xb_;
  int since_refactor_ = 0;
};

/// Minimises c, then breaks ties lexicographically over `order`: each later
/// stage minimises x[v] over the optimal face of the stages before it. The
/// sequence stops early once a stage has a unique optimum.
template <typename Scalar>
LpResult MinimizeLexicographic(DenseLpSolver<Scalar>& solver, const Eigen::VectorXd& c,
                               const std::vector<int>& order, int* stages_run = nullptr);

// ---------------------------------------------------------------------------

inline std::string ToString(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

template <typename Scalar>
typename DenseLpSolver<Scalar>::Vec DenseLpSolver<Scalar>::ScaledColumn(int j) const {
  Eigen::VectorXd col;
  if (j < A_.rows()) {
    col = A_.row(j).transpose().cwiseProduct(col_scale_) * row_scale_[j];
  } else {
    const ExtraRow& e = extra_[j - A_.rows()];
    col = e.a.cwiseProduct(col_scale_) * e.scale;
  }
  return col.template cast<Scalar>();
}

template <typename Scalar>
typename DenseLpSolver<Scalar>::Vec DenseLpSolver<Scalar>::BasisColumn(int k) const {
  const int j = basis_[k];
  if (j >= 0) return ScaledColumn(j);
  Vec col = Vec::Zero(n_);
  const int i = -j - 1;
  col[i] = artificial_sign_[i];
  return col;
}

template <typename Scalar>
Eigen::VectorXd DenseLpSolver<Scalar>::ScaledProducts(const Vec& pi) const {
  const Eigen::VectorXd v = pi.template cast<double>().cwiseProduct(col_scale_);
  Eigen::VectorXd dot(num_rows());
  dot.head(A_.rows()).noalias() = A_ * v;
  dot.head(A_.rows()).array() *= row_scale_.array();
  for (std::size_t e = 0; e < extra_.size(); ++e) {
    dot[A_.rows() + static_cast<Eigen::Index>(e)] = extra_[e].scale * extra_[e].a.dot(v);
  }
  return dot;
}

template <typename Scalar>
void DenseLpSolver<Scalar>::Refactor() {
  Mat basis_matrix(n_, n_);
  for (int k = 0; k < n_; ++k) basis_matrix.col(k) = BasisColumn(k);
  Eigen::FullPivLU<Mat> lu(basis_matrix);
  binv_ = lu.inverse();
  xb_ = binv_ * rhs_;
  for (int k = 0; k < n_; ++k) {
    if (xb_[k] < Scalar(0)) xb_[k] = Scalar(0);
  }
  since_refactor_ = 0;
}

template <typename Scalar>
bool DenseLpSolver<Scalar>::Pivot(int entering, bool phase_one, bool bland, bool* improved) {
  const Vec w = binv_ * ScaledColumn(entering);
  const Scalar piv = Scalar(options_.pivot_tol);
  const Scalar delta = Scalar(options_.feasibility_tol);
  int leave = -1;
  if (bland) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < n_; ++k) {
      if (w[k] <= piv) continue;
      const Scalar ratio = xb_[k] / w[k];
      if (ratio < best || (ratio == best && basis_[k] < basis_[leave])) {
        best = ratio;
        leave = k;
      }
    }
  } else {
    // Harris two-pass ratio test.
    Scalar bound = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < n_; ++k) {
      if (w[k] > piv) bound = std::min(bound, (xb_[k] + delta) / w[k]);
    }
    Scalar best_w = Scalar(0);
    for (int k = 0; k < n_; ++k) {
      if (w[k] > piv && xb_[k] / w[k] <= bound && w[k] > best_w) {
        best_w = w[k];
        leave = k;
      }
    }
  }
  if (leave < 0) return false;
  // In phase one, prefer retiring an artificial when it ties for the ratio.
  if (phase_one && basis_[leave] >= 0) {
    const Scalar ratio = std::max(xb_[leave] / w[leave], Scalar(0));
    for (int k = 0; k < n_; ++k) {
      if (basis_[k] < 0 && w[k] > piv && std::abs(xb_[k] / w[k] - ratio) <= delta) {
        leave = k;
        break;
      }
    }
  }
  const Scalar theta = std::max(xb_[leave] / w[leave], Scalar(0));
  *improved = theta > Scalar(0);
  xb_ -= theta * w;
  xb_[leave] = theta;
  for (int k = 0; k < n_; ++k) {
    if (xb_[k] < Scalar(0)) xb_[k] = Scalar(0);
  }
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> pivot_row = binv_.row(leave) / w[leave];
  binv_ -= w * pivot_row;
  binv_.row(leave) = pivot_row;

  const int old = basis_[leave];
  if (old >= 0) in_basis_[old] = 0;
  basis_[leave] = entering;
  in_basis_[entering] = 1;
  if (++since_refactor_ >= options_.refactor_interval) Refactor();
  return true;
}

template <typename Scalar>
LpStatus DenseLpSolver<Scalar>::RunPhase(bool phase_one, int* iterations, std::string* message) {
  const double tol = options_.optimality_tol;
  int stall = 0;
  bool bland = false;
  int pivot_failures = 0;
  std::vector<char> skipped(num_rows(), 0);
  while (true) {
    if (*iterations >= options_.max_iterations) {
      *message = "iteration limit reached";
      return LpStatus::kIterationLimit;
    }
    Vec cost(n_);
    for (int k = 0; k < n_; ++k) {
      const int j = basis_[k];
      cost[k] = phase_one ? Scalar(j < 0 ? 1 : 0) : Scalar(j < 0 ? 0.0 : ScaledRhs(j));
    }
    const Vec pi = binv_.transpose() * cost;
    const Eigen::VectorXd dot = ScaledProducts(pi);

    int entering = -1;
    double best = -tol;
    for (int j = 0; j < num_rows(); ++j) {
      if (in_basis_[j] || skipped[j]) continue;
      const double reduced = (phase_one ? 0.0 : ScaledRhs(j)) - dot[j];
      if (bland) {
        if (reduced < -tol) {
          entering = j;
          break;
        }
      } else if (reduced < best) {
        best = reduced;
        entering = j;
      }
    }
    if (entering < 0) return LpStatus::kOptimal;

    bool improved = false;
    ++*iterations;
    if (!Pivot(entering, phase_one, bland, &improved)) {
      if (pivot_failures++ == 0) {
        Refactor();
        continue;
      }
      // A barely violated row with no improving direction is accepted as
      // satisfied within tolerance.
      const double violation = (phase_one ? 0.0 : ScaledRhs(entering)) - dot[entering];
      if (!phase_one && -violation <= options_.acceptance_tol) {
        skipped[entering] = 1;
        pivot_failures = 0;
        continue;
      }
      if (phase_one) {
        // Phase one is bounded below by zero, so a ray here is numerical.
        *message = "numerical failure in ratio test";
        return LpStatus::kIterationLimit;
      }
      *message = "dual program unbounded: constraints are infeasible";
      return LpStatus::kInfeasible;
    }
    pivot_failures = 0;
    if (improved) {
      stall = 0;
      bland = false;
    } else if (++stall >= options_.stall_limit) {
      bland = true;
    }
  }
}

template <typename Scalar>
void DenseLpSolver<Scalar>::DriveOutArtificials() {
  for (int k = 0; k < n_; ++k) {
    if (basis_[k] >= 0) continue;
    const Vec row = binv_.row(k).transpose();
    const Eigen::VectorXd alpha = ScaledProducts(row);
    int best = -1;
    double best_abs = options_.pivot_tol * 1e3;
    for (int j = 0; j < num_rows(); ++j) {
      if (in_basis_[j]) continue;
      if (std::abs(alpha[j]) > best_abs) {
        best_abs = std::abs(alpha[j]);
        best = j;
      }
    }
    if (best < 0) continue;  // redundant equation: the variable touches no row
    const Vec w = binv_ * ScaledColumn(best);
    const Scalar theta = xb_[k] / w[k];
    xb_ -= theta * w;
    xb_[k] = theta;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> pivot_row = binv_.row(k) / w[k];
    binv_ -= w * pivot_row;
    binv_.row(k) = pivot_row;
    basis_[k] = best;
    in_basis_[best] = 1;
  }
  Refactor();
}

template <typename Scalar>
LpResult DenseLpSolver<Scalar>::Minimize(const Eigen::VectorXd& c) {
  if (c.size() != n_) throw std::invalid_argument("DenseLpSolver::Minimize: size mismatch");
  LpResult result;
  // A zero row with negative right-hand side can never be satisfied.
  for (Eigen::Index j = 0; j < A_.rows(); ++j) {
    if (A_.row(j).cwiseAbs().maxCoeff() == 0.0 && b_[j] < -options_.feasibility_tol) {
      result.status = LpStatus::kInfeasible;
      result.message = "row " + std::to_string(j) + " reads 0 <= negative";
      return result;
    }
  }
  rhs_ = (-c.cwiseProduct(col_scale_)).template cast<Scalar>();
  artificial_sign_.resize(n_);
  basis_.assign(n_, 0);
  in_basis_.assign(num_rows(), 0);
  for (int i = 0; i < n_; ++i) {
    artificial_sign_[i] = rhs_[i] >= Scalar(0) ? Scalar(1) : Scalar(-1);
    basis_[i] = -(i + 1);
  }
  Refactor();

  int iterations = 0;
  LpStatus status = RunPhase(true, &iterations, &result.message);
  if (status != LpStatus::kOptimal) {
    result.status = status;
    result.iterations = iterations;
    return result;
  }
  Scalar infeasibility(0);
  for (int k = 0; k < n_; ++k) {
    if (basis_[k] < 0) infeasibility += xb_[k];
  }
  const double scale = 1.0 + static_cast<double>(rhs_.cwiseAbs().maxCoeff());
  if (static_cast<double>(infeasibility) > options_.feasibility_tol * scale * 1e2) {
    result.status = LpStatus::kUnbounded;
    result.iterations = iterations;
    result.message = "dual program infeasible: objective unbounded below";
    return result;
  }
  DriveOutArtificials();
  status = RunPhase(false, &iterations, &result.message);
  result.iterations = iterations;
  result.status = status;
  if (status != LpStatus::kOptimal) return result;

  // Final multipliers from a fresh factorisation.
  Mat basis_matrix(n_, n_);
  Vec cost(n_);
  for (int k = 0; k < n_; ++k) {
    basis_matrix.col(k) = BasisColumn(k);
    cost[k] = basis_[k] < 0 ? Scalar(0) : Scalar(ScaledRhs(basis_[k]));
  }
  Eigen::FullPivLU<Mat> lu(basis_matrix.transpose());
  Vec pi = lu.solve(cost);
  // One step of iterative refinement.
  pi += lu.solve(cost - basis_matrix.transpose() * pi);
  xb_ = lu.inverse().transpose() * rhs_;

  result.x = pi.template cast<double>().cwiseProduct(col_scale_);
  result.objective = c.dot(result.x);
  for (int k = 0; k < n_; ++k) {
    if (basis_[k] < 0) continue;
    result.basis_rows.push_back(basis_[k]);
    const double y = static_cast<double>(xb_[k]) * RowScale(basis_[k]);
    result.multipliers.push_back(std::max(y, 0.0));
    if (static_cast<double>(xb_[k]) <= options_.feasibility_tol) result.degenerate = true;
  }
  if (static_cast<int>(result.basis_rows.size()) < n_) result.degenerate = true;
  return result;
}

template <typename Scalar>
LpResult MinimizeLexicographic(DenseLpSolver<Scalar>& solver, const Eigen::VectorXd& c,
                               const std::vector<int>& order, int* stages_run) {
  const double tol = 1e-9;
  LpResult best = solver.Minimize(c);
  int stages = 0;
  if (best.status != LpStatus::kOptimal) return best;
  const double primary = best.objective;
  const int saved_limit = solver.options().max_iterations;
  // Tie-break stages are bounded; a stage that stalls ends the sequence.
  solver.options().max_iterations = std::min(saved_limit, 20 * (best.iterations + 50));
  const double allowed =
      std::max(solver.options().feasibility_tol, solver.MaxViolation(best.x));
  solver.AddRow(c, primary + tol * (1.0 + std::abs(primary)));
  LpResult current = best;
  for (int v : order) {
    if (!current.degenerate) break;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(c.size());
    e[v] = 1.0;
    LpResult stage = solver.Minimize(e);
    ++stages;
    if (stage.status != LpStatus::kOptimal || solver.MaxViolation(stage.x) > allowed) break;
    const double value = stage.x[v];
    solver.AddRow(e, value + tol * (1.0 + std::abs(value)));
    stage.objective = c.dot(stage.x);
    stage.iterations += current.iterations;
    current = stage;
  }
  solver.options().max_iterations = saved_limit;
  if (stages_run != nullptr) *stages_run = stages;
  return current;
}

}  // namespace safesynth
