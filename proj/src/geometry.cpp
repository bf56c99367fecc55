#include "safesynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace safesynth {

Box::Box(VectorXd lower, VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw std::invalid_argument("Box: bounds must be non-empty and of equal size");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] <= upper_[i]) || !std::isfinite(lower_[i]) ||
        !std::isfinite(upper_[i])) {
      throw std::invalid_argument("Box: requires finite lower <= upper on every axis");
    }
  }
}

bool Box::Contains(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != lower_.size()) {
    throw std::invalid_argument("Box::Contains: dimension mismatch");
  }
  return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
}

bool Box::Contains(const Box& other) const {
  return other.dim() == dim() && (other.lower_.array() >= lower_.array()).all() &&
         (other.upper_.array() <= upper_.array()).all();
}

bool Box::Intersects(const Box& other) const {
  if (other.dim() != dim()) {
    throw std::invalid_argument("Box::Intersects: dimension mismatch");
  }
  return (lower_.array() <= other.upper_.array()).all() &&
         (other.lower_.array() <= upper_.array()).all();
}

double Box::Distance(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != lower_.size()) {
    throw std::invalid_argument("Box::Distance: dimension mismatch");
  }
  const VectorXd below = (lower_ - x).cwiseMax(0.0);
  const VectorXd above = (x - upper_).cwiseMax(0.0);
  return (below + above).norm();
}

Box Box::Product(const Box& other) const {
  VectorXd lo(dim() + other.dim());
  VectorXd hi(dim() + other.dim());
  lo << lower_, other.lower_;
  hi << upper_, other.upper_;
  return Box(std::move(lo), std::move(hi));
}

bool Box::operator==(const Box& other) const {
  return lower_.size() == other.lower_.size() && lower_ == other.lower_ &&
         upper_ == other.upper_;
}

double Volume(const Box& box) { return box.widths().prod(); }

RegionUnion::RegionUnion(std::vector<Box> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) {
    throw std::invalid_argument("RegionUnion: needs at least one box");
  }
  for (const Box& b : parts_) {
    if (b.dim() != parts_.front().dim()) {
      throw std::invalid_argument("RegionUnion: boxes differ in dimension");
    }
  }
}

RegionUnion::RegionUnion(Box single) : parts_{std::move(single)} {}

bool RegionUnion::Contains(const Eigen::Ref<const VectorXd>& x) const {
  return std::any_of(parts_.begin(), parts_.end(),
                     [&](const Box& b) { return b.Contains(x); });
}

double RegionUnion::Distance(const Eigen::Ref<const VectorXd>& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Box& b : parts_) best = std::min(best, b.Distance(x));
  return best;
}

bool RegionUnion::Intersects(const RegionUnion& other) const {
  for (const Box& a : parts_) {
    for (const Box& b : other.parts_) {
      if (a.Intersects(b)) return true;
    }
  }
  return false;
}

bool RegionUnion::SubsetOf(const Box& box) const {
  return std::all_of(parts_.begin(), parts_.end(),
                     [&](const Box& b) { return box.Contains(b); });
}

SampleSpace::SampleSpace(Box box) : box_(std::move(box)), volume_(Volume(box_)) {
  if (!(volume_ > 0.0)) {
    throw std::invalid_argument("SampleSpace: X×U must have positive volume");
  }
}

SampleSpace::SampleSpace(const Box& state_box, const Box& input_box)
    : SampleSpace(state_box.Product(input_box)) {}

double GammaHalfPlusOne(int n) {
  if (n < 0) throw std::invalid_argument("GammaHalfPlusOne: n must be >= 0");
  // Even n: (n/2)!.  Odd n: (n/2)(n/2 - 1)...(1/2) √π.
  double value = (n % 2 == 0) ? 1.0 : std::sqrt(std::numbers::pi);
  for (double k = 0.5 * n; k > 0.75; k -= 1.0) value *= k;
  if (n % 2 == 1) value *= 0.5;
  return value;
}

namespace {

double BallConstant(const SampleSpace& space) {
  const int n = space.dim();
  return std::pow(std::numbers::pi, 0.5 * n) /
         (std::ldexp(1.0, n) * GammaHalfPlusOne(n) * space.volume());
}

}  // namespace

double UOfR(double r, const SampleSpace& space) {
  if (!(r >= 0.0)) throw std::invalid_argument("UOfR: radius must be >= 0");
  return std::min(1.0, BallConstant(space) * std::pow(r, space.dim()));
}

double UInverse(double eps, const SampleSpace& space) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("UInverse: eps must lie in [0, 1]");
  }
  return std::pow(eps / BallConstant(space), 1.0 / space.dim());
}

VectorXd SampleUniformAt(const Box& box, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 engine(seq);
  VectorXd p(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    const double unit = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    p[i] = box.lower()[i] + unit * (box.upper()[i] - box.lower()[i]);
  }
  return p;
}

MatrixXd SampleUniform(const SampleSpace& space, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("SampleUniform: count must be >= 0");
  MatrixXd points(space.dim(), count);
  for (int k = 0; k < count; ++k) {
    points.col(k) = SampleUniformAt(space.box(), seed, static_cast<std::uint64_t>(k));
  }
  return points;
}

VectorXd GridSpacing(const Box& box, int points_per_axis) {
  if (points_per_axis < 1) throw std::invalid_argument("grid needs >= 1 point per axis");
  VectorXd h = box.widths();
  if (points_per_axis == 1) return h;
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] /= (points_per_axis - 1);
  return h;
}

MatrixXd TensorGrid(const Box& box, int points_per_axis) {
  if (points_per_axis < 1) throw std::invalid_argument("grid needs >= 1 point per axis");
  const int n = box.dim();
  std::vector<int> counts(n);
  Eigen::Index total = 1;
  for (int i = 0; i < n; ++i) {
    counts[i] = (box.widths()[i] > 0.0) ? points_per_axis : 1;
    total *= counts[i];
  }
  MatrixXd grid(n, total);
  std::vector<int> idx(n, 0);
  for (Eigen::Index k = 0; k < total; ++k) {
    for (int i = 0; i < n; ++i) {
      grid(i, k) = (counts[i] == 1)
                       ? box.lower()[i]
                       : box.lower()[i] + box.widths()[i] * idx[i] / (counts[i] - 1);
      if (counts[i] > 1 && idx[i] == counts[i] - 1) grid(i, k) = box.upper()[i];
    }
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
  }
  return grid;
}

MatrixXd TensorGrid(const RegionUnion& region, int points_per_axis) {
  std::vector<MatrixXd> blocks;
  Eigen::Index cols = 0;
  for (const Box& b : region.parts()) {
    blocks.push_back(TensorGrid(b, points_per_axis));
    cols += blocks.back().cols();
  }
  MatrixXd grid(region.dim(), cols);
  Eigen::Index at = 0;
  for (const MatrixXd& b : blocks) {
    grid.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return grid;
}

}  // namespace safesynth
