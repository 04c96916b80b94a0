/*
 Copyright 2026 The sparsehjb Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <array>
#include <optional>

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/feedback.hpp"

namespace sparsehjb {

/// dx = (c x + u) dt + sigma dw, |u| <= 1, g(x) = x^2.
struct ScalarLinearParams {
  double c = 1.0;
  double sigma = 0.1;
  double horizon = 1.0;
};

ProblemSpec scalar_linear_problem(const ScalarLinearParams& params, Penalty penalty = Penalty::kL0);

/// Load frequency control with a rate limiter:
///   dx1 = (-p x1 - k x2) dt + k u dt + k sigma dw,   dx2 = sat_d(x1 - x2) dt,
/// |u| <= 1, g(x) = |x|^2.
struct LfcParams {
  double p = 1.0 / 3.0;
  double k = 2.0;
  double sigma = 0.5;
  double d = 0.4;
  double horizon = 0.5;
};

double saturate(double x, double limit);

ProblemSpec lfc_problem(const LfcParams& params, Penalty penalty = Penalty::kL0);

/// Constant-coefficient control-affine problem:
///   f0(x) = A x + a,  f_j = column j of B,  sigma constant,
///   g(x) = x^T Q x + q^T x + q0,  l(x) = x^T R x.
struct CustomCoefficients {
  Matrix drift_matrix;
  Vector drift_offset;
  Matrix control_matrix;
  Matrix diffusion;
  Matrix terminal_quadratic;
  Vector terminal_linear;
  double terminal_constant = 0.0;
  Matrix running_quadratic;
  BoxControlSet controls;
  double horizon = 1.0;
};

ProblemSpec custom_problem(const CustomCoefficients& coefficients, Penalty penalty = Penalty::kL0);

/// Smallest positive 1D root over all branches, if any.
std::optional<double> positive_root(const SwitchingBoundary& boundary);

/// Walks a grid line from a start node and returns the distance at which the
/// feedback on the given channel first becomes nonzero (linear interpolation of
/// the violated switching inequality). Returns the distance to the grid edge
/// when the control stays zero all the way.
struct RayExtent {
  double distance = 0.0;
  bool reached_edge = false;
};

RayExtent zero_region_extent(const FeedbackMap& map, double s, int channel, int axis,
                             std::array<int, 2> start, int direction);

}  // namespace sparsehjb
