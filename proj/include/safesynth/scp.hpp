#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safesynth/geometry.hpp"
#include "safesynth/lp_solver.hpp"
#include "safesynth/plant.hpp"
#include "safesynth/polynomial.hpp"

namespace safesynth {

/// Placement of d = (K, λ, γ, c, q, p) in the LP decision vector, followed by
/// the nonnegative magnitude variables |q|, |p| that carry the coefficient
/// norm bounds.
class DecisionLayout {
 public:
  DecisionLayout(int barrier_terms, std::vector<int> controller_terms);

  static constexpr int kK = 0;
  static constexpr int kLambda = 1;
  static constexpr int kGamma = 2;
  static constexpr int kC = 3;

  int barrier_terms() const { return q_size_; }
  int inputs() const { return static_cast<int>(p_sizes_.size()); }
  int controller_terms(int input) const { return p_sizes_[input]; }
  int controller_terms_total() const { return p_total_; }

  int q_offset() const { return 4; }
  int p_offset(int input) const { return p_offsets_[input]; }
  int q_magnitude_offset() const { return 4 + q_size_ + p_total_; }
  int p_magnitude_offset(int input) const { return p_offsets_[input] + q_size_ + p_total_; }

  /// 4 + Q + P: the certificate part of the decision vector.
  int core_size() const { return 4 + q_size_ + p_total_; }
  int size() const { return 2 * (q_size_ + p_total_) + 4; }

 private:
  int q_size_;
  std::vector<int> p_sizes_;
  std::vector<int> p_offsets_;
  int p_total_;
};

enum class RowTag { kG1, kG2, kG3, kG4, kStructural };

std::string ToString(RowTag tag);

/// A block of rows coeffs · d <= rhs with provenance.
struct RowBlock {
  RowMatrixXd coeffs;
  VectorXd rhs;
  RowTag tag = RowTag::kStructural;
  std::vector<long> origin;

  int rows() const { return static_cast<int>(rhs.size()); }
};

/// Everything about the synthesis problem except the data.
struct CbfTemplate {
  Box state_box;                 // X
  RegionUnion initial_set;       // X0
  RegionUnion unsafe_set;        // Xu
  Box input_box;                 // U as a box (the sampling domain)
  MatrixXd input_A;              // U = {u | A u <= b}
  VectorXd input_b;
  int horizon = 1;               // T
  PolyBasis barrier_basis;       // over the state
  std::vector<PolyBasis> controller_bases;  // one per input, over the state
  double barrier_norm_bound = 0.1;
  double controller_norm_bound = 0.05;

  int state_dim() const { return state_box.dim(); }
  int input_dim() const { return input_box.dim(); }
  DecisionLayout layout() const;
  SampleSpace sample_space() const { return SampleSpace(state_box, input_box); }
  /// Throws std::invalid_argument naming the violated requirement.
  void Validate() const;
};

struct GridSettings {
  int initial_points = 1001;  // per axis of each X0 box
  int unsafe_points = 501;    // per axis of each Xu box
  int state_points = 4001;    // per axis of X (input constraints)
  double strict_margin = 1e-6;
  bool tighten = true;
};

/// Bound on |p(x) - p(nearest or interpolating grid values)| over a box for
/// any coefficients inside `coeff_bounds`; the smaller of the first-order
/// nearest-node bound and the second-order interpolation bound.
double GridTightening(const PolyBasis& basis, const Box& box, int points_per_axis,
                      const Eigen::Ref<const VectorXd>& coeff_bounds);

/// B(q,x) - γ <= -margin - tighten at each grid column.
RowBlock AssembleG1(const Eigen::Ref<const MatrixXd>& grid, const PolyBasis& basis,
                    const DecisionLayout& layout, double margin, double tighten);
/// -B(q,x) + λ <= -tighten.
RowBlock AssembleG2(const Eigen::Ref<const MatrixXd>& grid, const PolyBasis& basis,
                    const DecisionLayout& layout, double tighten);
/// B(q,x') - B(q,x) + Σ(u_i - F_i(p_i,x)) - c - K <= 0 for one sample.
void AssembleG3(const Sample& sample, const PolyBasis& barrier,
                const std::vector<PolyBasis>& controllers, const DecisionLayout& layout,
                Eigen::Ref<Eigen::RowVectorXd> coeffs, double* rhs);
RowBlock AssembleG3(const Dataset& data, const PolyBasis& barrier,
                    const std::vector<PolyBasis>& controllers, const DecisionLayout& layout);
/// (A [F_1(x); ...; F_m(x)] - b)_i <= -tighten_i for every grid column.
RowBlock AssembleG4(const Eigen::Ref<const MatrixXd>& grid, const MatrixXd& input_A,
                    const VectorXd& input_b, const std::vector<PolyBasis>& controllers,
                    const DecisionLayout& layout, const Eigen::Ref<const VectorXd>& tighten);
/// λ - γ >= cT, c >= 0, and the Gram row-sum bounds on q and each p_i.
RowBlock AssembleStructural(const CbfTemplate& tmpl, const DecisionLayout& layout);

/// The scenario program: minimise K over all rows.
struct LpProblem {
  DecisionLayout layout;
  RowMatrixXd coeffs;
  VectorXd rhs;
  std::vector<RowTag> tags;
  std::vector<long> origins;
  /// Tightening applied per tag (diagnostics only).
  double g1_tightening = 0.0;
  double g2_tightening = 0.0;
  double g4_tightening = 0.0;

  explicit LpProblem(DecisionLayout l) : layout(std::move(l)) {}
  int rows() const { return static_cast<int>(rhs.size()); }
  void Append(const RowBlock& block);
  VectorXd Objective() const;
  int CountTag(RowTag tag) const;
};

/// Assembles the full scenario program for a template and scenario dataset.
LpProblem BuildScp(const CbfTemplate& tmpl, const Dataset& scenario, const GridSettings& grid);

/// Writes one line per row: `tag origin rhs idx:value ...` (nonzeros only).
void DumpTableau(const LpProblem& problem, std::ostream& out);

struct ScpTolerances {
  double activity = 1e-7;
  double feasibility = 1e-8;
  double optimality = 1e-8;
  bool lexicographic = true;
};

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  VectorXd d_star;
  double objective = 0.0;  // K*_N
  std::vector<int> active_rows;
  double max_violation = 0.0;
  int iterations = 0;
  int tie_break_stages = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;
  std::string message;

  double K() const { return d_star[DecisionLayout::kK]; }
  double lambda() const { return d_star[DecisionLayout::kLambda]; }
  double gamma() const { return d_star[DecisionLayout::kGamma]; }
  double c() const { return d_star[DecisionLayout::kC]; }
};

LpSolution SolveScp(const LpProblem& problem, const ScpTolerances& tol = {});

/// Rows with |coeffs·d - rhs| <= tol among the g3 rows: an upper bound on
/// the number of support constraints.
int CountActiveG3(const LpProblem& problem, const LpSolution& solution, double tol);

/// Number of g3 rows whose single removal lowers K* by more than `tol`.
/// One re-solve per g3 row; meant for small problems.
int ExactSupportCount(const LpProblem& problem, const LpSolution& solution, double tol = 1e-8);

/// Barrier and controller polynomials carried by a decision vector.
Polynomial BarrierOf(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d);
std::vector<Polynomial> ControllerOf(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d);

/// g3(x, u, d) evaluated directly from the polynomials.
double G3Residual(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                  const Sample& sample);

}  // namespace safesynth
