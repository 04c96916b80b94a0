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

#include <cmath>
#include <random>

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/experiments.hpp"

namespace sparsehjb::testing {

// Uniform draws for hand-rolled property tests; fixed seeds keep failures reproducible.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Vector vector(int n, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Matrix matrix(int r, int c, double lo, double hi) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

inline ProblemSpec scalar_problem(double sigma, Penalty penalty = Penalty::kL0, double c = 1.0,
                                  double horizon = 1.0) {
  ScalarLinearParams params;
  params.c = c;
  params.sigma = sigma;
  params.horizon = horizon;
  return scalar_linear_problem(params, penalty);
}

// Problem with nothing to pay for: g = 0, l = 0.
inline ProblemSpec null_problem(int n, Penalty penalty = Penalty::kL0) {
  CustomCoefficients c;
  c.drift_matrix = Matrix::Identity(n, n) * 0.5;
  c.drift_offset = Vector::Zero(n);
  c.control_matrix = Matrix::Ones(n, 1);
  c.diffusion = Matrix::Identity(n, n) * 0.3;
  c.terminal_quadratic = Matrix::Zero(n, n);
  c.terminal_linear = Vector::Zero(n);
  c.running_quadratic = Matrix::Zero(n, n);
  c.controls = BoxControlSet::unit(1);
  c.horizon = 1.0;
  return custom_problem(c, penalty);
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace sparsehjb::testing
