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

#include "sparsehjb/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace sparsehjb {

ProblemSpec scalar_linear_problem(const ScalarLinearParams& params, Penalty penalty) {
  ProblemSpec spec;
  spec.system.state_dim = 1;
  spec.system.control_dim = 1;
  spec.system.noise_dim = 1;
  spec.system.drift = [c = params.c](const Vector& x) -> Vector { return c * x; };
  spec.system.control_fields = {[](const Vector&) -> Vector { return Vector::Ones(1); }};
  spec.system.diffusion = [s = params.sigma](const Vector&) -> Matrix {
    return Matrix::Constant(1, 1, s);
  };
  spec.controls = BoxControlSet::unit(1);
  spec.horizon = params.horizon;
  spec.terminal_cost = [](const Vector& x) { return x.squaredNorm(); };
  spec.penalty = penalty;
  return spec;
}

double saturate(double x, double limit) { return std::clamp(x, -limit, limit); }

ProblemSpec lfc_problem(const LfcParams& params, Penalty penalty) {
  if (!(params.d > 0.0)) throw ConfigError("rate limit d must be positive");
  ProblemSpec spec;
  spec.system.state_dim = 2;
  spec.system.control_dim = 1;
  spec.system.noise_dim = 1;
  spec.system.drift = [params](const Vector& x) -> Vector {
    Vector f(2);
    f(0) = -params.p * x(0) - params.k * x(1);
    f(1) = saturate(x(0) - x(1), params.d);
    return f;
  };
  spec.system.control_fields = {[k = params.k](const Vector&) -> Vector {
    return Eigen::Vector2d(k, 0.0);
  }};
  spec.system.diffusion = [params](const Vector&) -> Matrix {
    Matrix s(2, 1);
    s << params.k * params.sigma, 0.0;
    return s;
  };
  spec.controls = BoxControlSet::unit(1);
  spec.horizon = params.horizon;
  spec.terminal_cost = [](const Vector& x) { return x.squaredNorm(); };
  spec.penalty = penalty;
  return spec;
}

ProblemSpec custom_problem(const CustomCoefficients& cc, Penalty penalty) {
  const auto n = cc.drift_matrix.rows();
  if (cc.drift_matrix.cols() != n || cc.drift_offset.size() != n ||
      cc.control_matrix.rows() != n || cc.diffusion.rows() != n ||
      cc.terminal_quadratic.rows() != n || cc.terminal_quadratic.cols() != n ||
      cc.terminal_linear.size() != n || cc.running_quadratic.rows() != n ||
      cc.running_quadratic.cols() != n) {
    throw ConfigError("custom problem coefficients have inconsistent dimensions");
  }
  ProblemSpec spec;
  spec.system.state_dim = static_cast<int>(n);
  spec.system.control_dim = static_cast<int>(cc.control_matrix.cols());
  spec.system.noise_dim = static_cast<int>(cc.diffusion.cols());
  spec.system.drift = [a = cc.drift_matrix, b = cc.drift_offset](const Vector& x) -> Vector {
    return a * x + b;
  };
  for (Eigen::Index j = 0; j < cc.control_matrix.cols(); ++j) {
    spec.system.control_fields.push_back(
        [col = Vector(cc.control_matrix.col(j))](const Vector&) -> Vector { return col; });
  }
  spec.system.diffusion = [s = cc.diffusion](const Vector&) -> Matrix { return s; };
  spec.controls = cc.controls;
  spec.horizon = cc.horizon;
  spec.terminal_cost = [q = cc.terminal_quadratic, l = cc.terminal_linear,
                        c = cc.terminal_constant](const Vector& x) {
    return x.dot(q * x) + l.dot(x) + c;
  };
  if (!cc.running_quadratic.isZero(0.0)) {
    spec.running_cost = [r = cc.running_quadratic](const Vector& x) { return x.dot(r * x); };
  }
  spec.penalty = penalty;
  spec.validate();
  return spec;
}

std::optional<double> positive_root(const SwitchingBoundary& boundary) {
  std::optional<double> best;
  for (const auto& branch : boundary.branches) {
    for (double x : branch.points) {
      if (x > 0.0 && (!best || x < *best)) best = x;
    }
  }
  return best;
}

RayExtent zero_region_extent(const FeedbackMap& map, double s, int channel, int axis,
                             std::array<int, 2> start, int direction) {
  const auto& field = map.field();
  const auto& grid = field.grid();
  const auto& spec = map.spec();
  if (axis < 0 || axis >= grid.dim() || (direction != 1 && direction != -1)) {
    throw ConfigError("invalid ray");
  }
  const std::size_t k = field.nearest_slice(s);
  const double lo = spec.controls.lower(channel);
  const double hi = spec.controls.upper(channel);
  auto slack = [&](std::array<int, 2> idx) {
    const std::size_t flat = grid.flat_index(idx[0], grid.dim() == 2 ? idx[1] : 0);
    const Vector x = grid.node(flat);
    const double b = field.nodal_gradient(k, flat).dot(spec.system.control_fields[channel](x));
    return std::min(b * lo + 1.0, b * hi + 1.0);
  };
  const double h = grid.spacing(axis);
  double previous = slack(start);
  if (previous < 0.0) return {0.0, false};
  auto idx = start;
  int steps = 0;
  while (true) {
    auto next = idx;
    next[axis] += direction;
    if (next[axis] < 0 || next[axis] >= grid.points(axis)) return {steps * h, true};
    const double current = slack(next);
    if (current < 0.0) return {(steps + previous / (previous - current)) * h, false};
    previous = current;
    idx = next;
    ++steps;
  }
}

}  // namespace sparsehjb
