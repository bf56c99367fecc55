#pragma once

#include "safesynth/pipeline.hpp"

namespace fixtures {

inline safesynth::CbfTemplate RoomTemplate(int barrier_degree = 4, int controller_degree = 4) {
  safesynth::CbfTemplate t = safesynth::RoomTemperatureConfig().tmpl;
  t.barrier_basis = safesynth::PolyBasis(1, barrier_degree);
  t.controller_bases = {safesynth::PolyBasis(1, controller_degree)};
  return t;
}

inline safesynth::GridSettings CoarseGrid() {
  safesynth::GridSettings g;
  g.initial_points = 41;
  g.unsafe_points = 21;
  g.state_points = 81;
  return g;
}

/// Two states, two inputs, quadratic barrier, linear controllers.
inline safesynth::CbfTemplate PlanarTemplate() {
  using safesynth::Box;
  using safesynth::VectorXd;
  safesynth::CbfTemplate t;
  t.state_box = Box(VectorXd::Constant(2, -2.0), VectorXd::Constant(2, 2.0));
  t.initial_set = safesynth::RegionUnion(Box(VectorXd::Constant(2, -0.5), VectorXd::Constant(2, 0.5)));
  t.unsafe_set = safesynth::RegionUnion(Box(VectorXd::Constant(2, 1.5), VectorXd::Constant(2, 2.0)));
  t.input_box = Box(VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0));
  t.input_A = safesynth::MatrixXd(4, 2);
  t.input_A << 1, 0, -1, 0, 0, 1, 0, -1;
  t.input_b = VectorXd::Ones(4);
  t.horizon = 3;
  t.barrier_basis = safesynth::PolyBasis(2, 2);
  t.controller_bases = {safesynth::PolyBasis(2, 1), safesynth::PolyBasis(2, 1)};
  return t;
}

}  // namespace fixtures
