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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sparsehjb/errors.hpp"
#include "sparsehjb/experiments.hpp"
#include "sparsehjb/grid.hpp"
#include "sparsehjb/hjb_solver.hpp"
#include "test_support.hpp"

using namespace sparsehjb;
using sparsehjb::testing::Draw;
using sparsehjb::testing::vec;

namespace {

SpatialGrid line_grid(int points, double half_width = 2.0) {
  return SpatialGrid(vec({-half_width}), vec({half_width}), {points});
}

// Zero-control solution of the deterministic scalar problem, valid where |x| is
// below the switching threshold.
double off_region_value(double t, double x) { return x * x * std::exp(2.0 * (1.0 - t)); }

double probe_error(int points, Scheme scheme) {
  SolverConfig cfg;
  cfg.scheme = scheme;
  const auto field = solve_backward(testing::scalar_problem(0.0), line_grid(points), cfg);
  return std::abs(field.value_at(0.0, vec({0.05})) - off_region_value(0.0, 0.05));
}

}  // namespace

TEST_CASE("grid geometry") {
  const SpatialGrid g(vec({-1.0, 0.0}), vec({1.0, 3.0}), {11, 31});
  CHECK(g.size() == 11 * 31);
  CHECK(g.spacing(0) == doctest::Approx(0.2));
  CHECK(g.spacing(1) == doctest::Approx(0.1));
  CHECK(g.flat_index(2, 5) == 2 * 31 + 5);
  CHECK(g.multi_index(g.flat_index(7, 30)) == std::array<int, 2>{7, 30});
  CHECK(g.node(g.flat_index(10, 0)) == vec({1.0, 0.0}));
  CHECK_THROWS_AS(g.require_contains(vec({1.5, 0.0})), DomainError);
  CHECK_THROWS_AS(SpatialGrid(vec({0.0}), vec({1.0}), {5}), ConfigError);
  CHECK_THROWS_AS(SpatialGrid(vec({1.0}), vec({0.0}), {10}), ConfigError);
  CHECK_THROWS_AS(SpatialGrid(vec({0.0, 0.0}), vec({1.0, 1.0}), {3000, 3000}), ConfigError);
}

TEST_CASE("null problem propagates exact zeros") {
  for (auto scheme : {Scheme::kEno2Heun, Scheme::kUpwindEuler}) {
    for (auto boundary : {BoundaryPolicy::kOneSided, BoundaryPolicy::kFrozenTerminal}) {
      SolverConfig cfg;
      cfg.scheme = scheme;
      cfg.boundary = boundary;
      const auto field1 = solve_backward(testing::null_problem(1), line_grid(41), cfg);
      for (std::size_t k = 0; k < field1.num_slices(); ++k) CHECK(field1.slice(k).isZero(0.0));
      const SpatialGrid g2(vec({-1.0, -1.0}), vec({1.0, 1.0}), {21, 21});
      const auto field2 = solve_backward(testing::null_problem(2), g2, cfg);
      for (std::size_t k = 0; k < field2.num_slices(); ++k) CHECK(field2.slice(k).isZero(0.0));
      CHECK(gradient_at(field2, 0.3, vec({0.2, -0.4})).isZero(0.0));
      CHECK(hjb_residual(field2, testing::null_problem(2), 0.5, vec({0.0, 0.0})) == 0.0);
    }
  }
}

TEST_CASE("terminal slice is the sampled terminal cost") {
  const auto grid = line_grid(101);
  const auto field = solve_backward(testing::scalar_problem(0.1), grid, SolverConfig{});
  const Vector& last = field.slice(field.num_slices() - 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i)[0];
    CHECK(last[static_cast<Eigen::Index>(i)] == x * x);
  }
  CHECK(field.times().front() == 0.0);
  CHECK(field.times().back() == 1.0);
  CHECK(gradient_at(field, 1.0, vec({1.0}))[0] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("deterministic scalar field matches the closed form in the zero-control region") {
  const auto spec = testing::scalar_problem(0.0);
  const auto field = solve_backward(spec, line_grid(401), SolverConfig{});
  CHECK(std::abs(field.value_at(0.0, vec({0.05})) - 0.0025 * std::exp(2.0)) <= 2e-3);
  CHECK(std::abs(gradient_at(field, 0.0, vec({0.05}))[0] - 0.1 * std::exp(2.0)) <= 5e-2);
  CHECK(std::abs(hjb_residual(field, spec, 0.5, vec({0.05}))) <= 5e-2);
}

TEST_CASE("refinement reduces the probe error") {
  for (auto scheme : {Scheme::kEno2Heun, Scheme::kUpwindEuler}) {
    const double coarse = probe_error(201, scheme);
    const double fine = probe_error(401, scheme);
    INFO("scheme " << to_string(scheme) << ": " << coarse << " -> " << fine);
    CHECK(coarse / fine >= 1.5);
  }
}

TEST_CASE("L0 and L1 fields are bitwise equal on the unit box") {
  const auto grid = line_grid(201);
  const auto a = solve_backward(testing::scalar_problem(0.1, Penalty::kL0), grid, SolverConfig{});
  const auto b = solve_backward(testing::scalar_problem(0.1, Penalty::kL1), grid, SolverConfig{});
  CHECK(a == b);
}

TEST_CASE("monotone scheme preserves ordering of terminal data") {
  SolverConfig cfg;
  cfg.scheme = Scheme::kUpwindEuler;
  cfg.boundary = BoundaryPolicy::kFrozenTerminal;
  Draw draw(41);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = draw.uniform(0.0, 1.0), w = draw.uniform(1.0, 5.0), shift = draw.uniform(0.0, 0.5);
    auto low = testing::scalar_problem(draw.uniform(0.0, 0.5));
    auto high = low;
    low.terminal_cost = [](const Vector& x) { return x.squaredNorm(); };
    high.terminal_cost = [=](const Vector& x) {
      return x.squaredNorm() + shift + a * (1.0 + std::sin(w * x[0]));
    };
    SolveDiagnostics diag;
    const auto grid = line_grid(81);
    const auto v1 = solve_backward(low, grid, cfg, &diag);
    CHECK(diag.within_stability_bound);
    const auto v2 = solve_backward(high, grid, cfg, &diag);
    CHECK(diag.within_stability_bound);
    REQUIRE(v1.num_slices() == v2.num_slices());
    for (std::size_t k = 0; k < v1.num_slices(); ++k)
      CHECK((v2.slice(k) - v1.slice(k)).minCoeff() >= -1e-12);
  }
}

TEST_CASE("value field CSV round trip is exact") {
  SolverConfig cfg;
  cfg.store_every = 7;
  const auto field = solve_backward(testing::scalar_problem(0.1), line_grid(64), cfg);
  std::stringstream ss;
  write_value_field(ss, field);
  const auto back = read_value_field(ss);
  CHECK(back == field);

  LfcParams lfc;
  cfg.store_every = 50;
  const SpatialGrid g2(vec({-3.0, -3.0}), vec({3.0, 3.0}), {17, 13});
  const auto field2 = solve_backward(lfc_problem(lfc), g2, cfg);
  std::stringstream ss2;
  write_value_field(ss2, field2);
  CHECK(read_value_field(ss2) == field2);

  std::stringstream broken("# grid 1 -1 1 10\n# times 0 1\n1,2,3\n");
  CHECK_THROWS_AS(read_value_field(broken), ConfigError);
}

TEST_CASE("residual of a manufactured quadratic field") {
  // v(t,x) = q(t) x^2 + r x + s(t) with q = 1 + t, s = t^2. For the scalar problem
  // -v_t + H = -(x^2 + 2t) - c x v_x - sigma^2 q + channel_sup(v_x).
  const double c = 0.7, sigma = 0.3;
  const auto spec = testing::scalar_problem(sigma, Penalty::kL0, c);
  Draw draw(43);
  for (int trial = 0; trial < 3; ++trial) {
    const double r = draw.uniform(-1.0, 1.0);
    for (int points : {101, 201}) {
      const auto grid = line_grid(points);
      std::vector<double> times;
      std::vector<Vector> slices;
      const int steps = points;
      for (int k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        Vector v(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const double x = grid.node(i)[0];
          v[static_cast<Eigen::Index>(i)] = (1.0 + t) * x * x + r * x + t * t;
        }
        times.push_back(t);
        slices.push_back(v);
      }
      const ValueField field(grid, times, slices);
      for (double x : {-1.1, -0.3, 0.4, 0.9}) {
        const double t = 0.5;
        const double q = 1.0 + t, vx = 2.0 * q * x + r;
        const double exact = -(x * x + 2.0 * t) - c * x * vx - sigma * sigma * q +
                             channel_sup_l0(vx, -1.0, 1.0);
        const double got = hjb_residual(field, spec, t, vec({x}));
        const double h = grid.spacing(0);
        CHECK(std::abs(got - exact) <= 2.0 * (h * h + 1.0 / steps) + 1e-9);
      }
    }
  }
}

TEST_CASE("residual refuses edge slices and boundary nodes") {
  const auto spec = testing::scalar_problem(0.1);
  const auto field = solve_backward(spec, line_grid(41), SolverConfig{});
  CHECK_THROWS_AS(hjb_residual(field, spec, 1.0, vec({0.0})), DomainError);
  CHECK_THROWS_AS(hjb_residual(field, spec, 0.0, vec({0.0})), DomainError);
  CHECK_THROWS_AS(hjb_residual(field, spec, 0.5, vec({1.95})), DomainError);
  CHECK_THROWS_AS(gradient_at(field, 0.5, vec({2.5})), DomainError);
}

TEST_CASE("solver configuration errors") {
  const auto spec = testing::scalar_problem(0.1);
  SolverConfig cfg;
  cfg.time_steps = 10;
  CHECK_THROWS_AS(solve_backward(spec, line_grid(401), cfg), ConfigError);
  cfg = SolverConfig{};
  cfg.max_time_steps = 100;
  CHECK_THROWS_AS(solve_backward(spec, line_grid(401), cfg), InfeasibleResolutionError);
  cfg = SolverConfig{};
  cfg.cfl_safety = 1.5;
  CHECK_THROWS_AS(solve_backward(spec, line_grid(41), cfg), ConfigError);
  const SpatialGrid g2(vec({-1.0, -1.0}), vec({1.0, 1.0}), {11, 11});
  CHECK_THROWS_AS(solve_backward(spec, g2, SolverConfig{}), ConfigError);

  // Strongly correlated noise on a stretched grid breaks diagonal dominance.
  CustomCoefficients cc;
  cc.drift_matrix = Matrix::Zero(2, 2);
  cc.drift_offset = Vector::Zero(2);
  cc.control_matrix = Matrix::Ones(2, 1);
  cc.diffusion = Matrix::Ones(2, 1);
  cc.terminal_quadratic = Matrix::Identity(2, 2);
  cc.terminal_linear = Vector::Zero(2);
  cc.running_quadratic = Matrix::Zero(2, 2);
  cc.controls = BoxControlSet::unit(1);
  const SpatialGrid stretched(vec({-1.0, -1.0}), vec({1.0, 1.0}), {41, 11});
  CHECK_THROWS_AS(solve_backward(custom_problem(cc), stretched, SolverConfig{}), ConfigError);
  const SpatialGrid square(vec({-1.0, -1.0}), vec({1.0, 1.0}), {21, 21});
  CHECK_NOTHROW(solve_backward(custom_problem(cc), square, SolverConfig{}));
}

TEST_CASE("overflow is reported as divergence") {
  auto spec = testing::scalar_problem(0.1);
  spec.terminal_cost = [](const Vector& x) { return 3e307 * x.squaredNorm(); };
  CHECK_THROWS_AS(solve_backward(spec, line_grid(41), SolverConfig{}), DivergenceError);
}

TEST_CASE("stored slice stride keeps both ends") {
  SolverConfig cfg;
  cfg.store_every = 64;
  SolveDiagnostics diag;
  const auto field = solve_backward(testing::scalar_problem(0.1), line_grid(101), cfg, &diag);
  CHECK(field.times().front() == 0.0);
  CHECK(field.times().back() == 1.0);
  CHECK(field.num_slices() == static_cast<std::size_t>((diag.time_steps + 63) / 64 + 1));
}

TEST_CASE("dynamic programming defect") {
  const auto null = testing::null_problem(1);
  const auto zero_field = solve_backward(null, line_grid(41), SolverConfig{});
  DppOptions opt;
  opt.n_paths = 200;
  CHECK(dpp_check(zero_field, null, 0.0, vec({0.3}), 0.5, {vec({0.0})}, opt).defect == 0.0);

  const auto spec = testing::scalar_problem(0.1);
  const auto field = solve_backward(spec, line_grid(401), SolverConfig{});
  opt.n_paths = 2000;
  const auto r = dpp_check(field, spec, 0.0, vec({0.5}), 0.1, {vec({-1.0}), vec({0.0}), vec({1.0})}, opt);
  CHECK(r.defect >= 0.0);
  CHECK(r.defect <= 3.0 * r.standard_error + 5e-2);

  const auto det = testing::scalar_problem(0.0);
  const auto det_field = solve_backward(det, line_grid(401), SolverConfig{});
  const auto off = dpp_check(det_field, det, 0.0, vec({0.01}), 1.0, {vec({0.0})}, opt);
  CHECK(off.defect >= 0.0);
  CHECK(off.defect <= 1e-4);
  CHECK(off.best_estimate == doctest::Approx(1e-4 * std::exp(2.0)).epsilon(1e-2));
}
