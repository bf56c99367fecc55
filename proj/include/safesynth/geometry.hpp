#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace safesynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Axis-aligned hyper-rectangle with closed boundaries.
class Box {
 public:
  Box() = default;
  Box(VectorXd lower, VectorXd upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const VectorXd& lower() const { return lower_; }
  const VectorXd& upper() const { return upper_; }
  VectorXd widths() const { return upper_ - lower_; }
  VectorXd center() const { return 0.5 * (lower_ + upper_); }

  bool Contains(const Eigen::Ref<const VectorXd>& x) const;
  bool Contains(const Box& other) const;
  bool Intersects(const Box& other) const;
  /// Euclidean distance from x to the box (zero inside).
  double Distance(const Eigen::Ref<const VectorXd>& x) const;

  /// Cartesian product this × other.
  Box Product(const Box& other) const;

  bool operator==(const Box& other) const;

 private:
  VectorXd lower_;
  VectorXd upper_;
};

/// Product of side lengths; zero for a degenerate box.
double Volume(const Box& box);

/// Finite union of equally dimensioned boxes.
class RegionUnion {
 public:
  RegionUnion() = default;
  explicit RegionUnion(std::vector<Box> parts);
  RegionUnion(Box single);  // NOLINT(runtime/explicit)

  int dim() const { return parts_.front().dim(); }
  const std::vector<Box>& parts() const { return parts_; }

  /// Throws std::invalid_argument on dimension mismatch.
  bool Contains(const Eigen::Ref<const VectorXd>& x) const;
  double Distance(const Eigen::Ref<const VectorXd>& x) const;
  bool Intersects(const RegionUnion& other) const;
  bool SubsetOf(const Box& box) const;

 private:
  std::vector<Box> parts_;
};

/// The sampling domain X×U, sampled uniformly.
class SampleSpace {
 public:
  explicit SampleSpace(Box box);
  SampleSpace(const Box& state_box, const Box& input_box);

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  double volume() const { return volume_; }

 private:
  Box box_;
  double volume_;
};

/// Γ(n/2 + 1) by the integer / half-integer recurrence.
double GammaHalfPlusOne(int n);

/// Probability mass uniform sampling puts in a radius-r ball:
/// π^{n/2} r^n / (2^n Γ(n/2+1) Vol), clamped to 1.
double UOfR(double r, const SampleSpace& space);

/// Analytic inverse of UOfR on [0, 1].
double UInverse(double eps, const SampleSpace& space);

/// Uniform point on the box for (seed, index). Each index has its own
/// engine state, so any partition of the index range reproduces the same
/// sequence.
VectorXd SampleUniformAt(const Box& box, std::uint64_t seed, std::uint64_t index);

/// `count` points as columns of a dim × count matrix.
MatrixXd SampleUniform(const SampleSpace& space, int count, std::uint64_t seed);

/// Tensor grid with `points_per_axis` nodes per non-degenerate axis, as
/// columns. A degenerate axis contributes its single value.
MatrixXd TensorGrid(const Box& box, int points_per_axis);

/// Concatenated tensor grids over every part of a union.
MatrixXd TensorGrid(const RegionUnion& region, int points_per_axis);

/// Node spacing of TensorGrid along each axis (zero on degenerate axes).
VectorXd GridSpacing(const Box& box, int points_per_axis);

}  // namespace safesynth
