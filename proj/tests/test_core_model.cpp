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

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/experiments.hpp"
#include "test_support.hpp"

using namespace sparsehjb;
using sparsehjb::testing::Draw;
using sparsehjb::testing::vec;

namespace {

// Direct maximization of -b u - phi(u) over a uniform grid that contains lo, 0, hi.
template <class Phi>
double channel_sup_by_grid(double b, double lo, double hi, Phi phi, int n = 10001) {
  double best = -INFINITY;
  for (int i = 0; i < n; ++i) {
    double u = lo + (hi - lo) * i / (n - 1);
    if (i == n - 1) u = hi;
    best = std::max(best, -b * u - phi(u));
  }
  best = std::max(best, -phi(0.0));
  return best;
}

double l0_phi(double u) { return u != 0.0 ? 1.0 : 0.0; }

}  // namespace

TEST_CASE("psi0 counts exact nonzeros") {
  CHECK(psi0(vec({0.0, 0.0})) == 0.0);
  CHECK(psi0(vec({1.0, 0.0, -1.0})) == 2.0);
  CHECK(psi0(vec({1e-300})) == 1.0);
}

TEST_CASE("psi1 sums magnitudes") {
  CHECK(psi1(vec({0.0, 0.0})) == 0.0);
  CHECK(psi1(vec({1.0, -1.0})) == 2.0);
  CHECK(psi1(vec({0.5})) == 0.5);
}

TEST_CASE("psi0 and psi1 agree on ternary vectors") {
  Draw draw(11);
  for (int trial = 0; trial < 500; ++trial) {
    Vector u(draw.integer(1, 6));
    for (auto& x : u) x = static_cast<double>(draw.integer(-1, 1));
    CHECK(psi0(u) == psi1(u));
  }
}

TEST_CASE("channel suprema against grid maximization") {
  CHECK(channel_sup_l0(2.0, -1.0, 1.0) == doctest::Approx(channel_sup_by_grid(2.0, -1, 1, l0_phi)));
  CHECK(channel_sup_l0(2.0, -1.0, 1.0) == 1.0);
  CHECK(channel_sup_l0(0.5, -1.0, 1.0) == 0.0);
  CHECK(channel_sup_by_grid(0.5, -1, 1, l0_phi) == 0.0);
  CHECK(channel_sup_l0(0.0, -2.0, 3.0) == 0.0);

  CHECK(channel_sup_l1(2.0, -1.0, 1.0) == 1.0);
  CHECK(channel_sup_l1(0.5, -1.0, 1.0) == 0.0);
  CHECK(channel_sup_l1(-3.0, -1.0, 1.0) == 2.0);

  Draw draw(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double b = draw.uniform(-10, 10);
    const double lo = draw.uniform(-3, -0.1);
    const double hi = draw.uniform(0.1, 3);
    CHECK(channel_sup_l0(b, lo, hi) ==
          doctest::Approx(channel_sup_by_grid(b, lo, hi, l0_phi)).epsilon(1e-12));
    CHECK(channel_sup_l1(b, lo, hi) ==
          doctest::Approx(channel_sup_by_grid(b, lo, hi, [](double u) { return std::abs(u); }))
              .epsilon(1e-12));
    // The energy optimum is interior in general, so the grid only bounds it from below.
    const double l2 = channel_sup_l2(b, lo, hi);
    const double l2_grid = channel_sup_by_grid(b, lo, hi, [](double u) { return u * u; });
    CHECK(l2 >= l2_grid - 1e-12);
    CHECK(l2 - l2_grid <= 1e-6);
  }
}

TEST_CASE("channel suprema reject boxes that exclude zero") {
  CHECK_THROWS_AS(channel_sup_l0(1.0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(channel_sup_l1(1.0, -1.0, -0.5), ConfigError);
  CHECK_THROWS_AS(BoxControlSet(vec({0.5}), vec({1.0})), ConfigError);
}

TEST_CASE("box vertices") {
  const BoxControlSet box(vec({-1.0, -2.0}), vec({1.0, 3.0}));
  const auto v = box.vertices();
  REQUIRE(v.size() == 9);
  CHECK(v[0] == vec({-1.0, -2.0}));
  CHECK(v[4] == vec({0.0, 0.0}));
  CHECK(v[8] == vec({1.0, 3.0}));
  CHECK(box.is_vertex(vec({0.0, 3.0})));
  CHECK_FALSE(box.is_vertex(vec({0.5, 3.0})));
  CHECK(box.contains(vec({1.0 + 1e-13, 0.0})));
  CHECK_FALSE(box.contains(vec({1.0 + 1e-9, 0.0})));
}

TEST_CASE("hamiltonian examples") {
  const auto spec = testing::scalar_problem(0.1);
  const HamiltonianArgs args(vec({0.0}), vec({2.0}), Matrix::Zero(1, 1));
  CHECK(hamiltonian(spec, args) == 1.0);
  CHECK(hamiltonian_bruteforce(spec, args, 10001) == doctest::Approx(1.0).epsilon(1e-12));

  const HamiltonianArgs flat(vec({0.0}), vec({0.0}), Matrix::Zero(1, 1));
  CHECK(hamiltonian(spec, flat) == 0.0);
  CHECK(hamiltonian_bruteforce(spec, flat, 11) == 0.0);

  // -c x p - sigma^2 M / 2 + alpha(p) for the scalar system.
  Draw draw(3);
  const auto l1 = testing::scalar_problem(0.1, Penalty::kL1);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = draw.uniform(-2, 2), p = draw.uniform(-5, 5), m = draw.uniform(-5, 5);
    const double expected = -x * p - 0.005 * m + channel_sup_l1(p, -1.0, 1.0);
    CHECK(hamiltonian(l1, HamiltonianArgs(vec({x}), vec({p}), Matrix::Constant(1, 1, m))) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("hamiltonian rejects mismatched dimensions") {
  const auto spec = testing::scalar_problem(0.1);
  CHECK_THROWS_AS(hamiltonian(spec, HamiltonianArgs(vec({0.0, 1.0}), vec({1.0, 1.0}),
                                                    Matrix::Zero(2, 2))),
                  ConfigError);
}

TEST_CASE("hessian is symmetrized") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  const HamiltonianArgs args(vec({0.0, 0.0}), vec({0.0, 0.0}), m);
  CHECK(args.hessian()(0, 1) == 3.0);
  CHECK(args.hessian()(1, 0) == 3.0);
}

TEST_CASE("g_value examples") {
  const auto spec = testing::scalar_problem(0.1);
  CHECK(g_value(spec, vec({0.0}), vec({-1.0}), vec({2.0}), Matrix::Zero(1, 1)) == 1.0);
  const Vector x = vec({0.7});
  const Vector p = vec({-1.3});
  const Matrix m = Matrix::Constant(1, 1, 2.0);
  CHECK(g_value(spec, x, vec({0.0}), p, m) ==
        doctest::Approx(-0.7 * -1.3 - 0.5 * 0.01 * 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(g_value(spec, x, vec({1.5}), p, m), DomainError);
}

TEST_CASE("supremum dominance and brute-force agreement over random draws") {
  LfcParams lfc;
  const ProblemSpec systems[] = {testing::scalar_problem(0.1), testing::scalar_problem(0.1, Penalty::kL1),
                                 lfc_problem(lfc), lfc_problem(lfc, Penalty::kL1)};
  for (const auto& spec : systems) {
    Draw draw(17);
    const int n = spec.system.state_dim;
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector x = draw.vector(n, -10, 10);
      const Vector p = draw.vector(n, -10, 10);
      const Matrix m = draw.matrix(n, n, -10, 10);
      const HamiltonianArgs args(x, p, m);
      const double h = hamiltonian(spec, args);
      const double brute = hamiltonian_bruteforce(spec, args, 101);
      CHECK(std::abs(h - brute) <= 1e-9);
      const Vector u = draw.vector(1, -1, 1);
      CHECK(g_value(spec, x, u, p, args.hessian()) <= h + 1e-9);
    }
  }
}

TEST_CASE("L0 and L1 hamiltonians coincide bitwise on the unit box") {
  LfcParams lfc;
  const auto l0 = lfc_problem(lfc, Penalty::kL0);
  const auto l1 = lfc_problem(lfc, Penalty::kL1);
  Draw draw(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const HamiltonianArgs args(draw.vector(2, -10, 10), draw.vector(2, -10, 10),
                               draw.matrix(2, 2, -10, 10));
    CHECK(hamiltonian(l0, args) == hamiltonian(l1, args));
  }
}

TEST_CASE("hamiltonian is nonincreasing along positive semidefinite increments") {
  LfcParams lfc;
  const auto spec = lfc_problem(lfc);
  Draw draw(29);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = draw.vector(2, -3, 3);
    const Vector p = draw.vector(2, -10, 10);
    const Matrix m = draw.matrix(2, 2, -10, 10);
    const Matrix a = draw.matrix(2, 2, -2, 2);
    const Matrix psd = a * a.transpose();
    CHECK(hamiltonian(spec, HamiltonianArgs(x, p, m + psd)) <=
          hamiltonian(spec, HamiltonianArgs(x, p, m)) + 1e-12);
  }
}

TEST_CASE("brute force refuses wide control spaces") {
  CustomCoefficients c;
  c.drift_matrix = Matrix::Zero(1, 1);
  c.drift_offset = Vector::Zero(1);
  c.control_matrix = Matrix::Ones(1, 4);
  c.diffusion = Matrix::Zero(1, 1);
  c.terminal_quadratic = Matrix::Identity(1, 1);
  c.terminal_linear = Vector::Zero(1);
  c.running_quadratic = Matrix::Zero(1, 1);
  c.controls = BoxControlSet::unit(4);
  const auto spec = custom_problem(c);
  const HamiltonianArgs args(vec({0.0}), vec({1.0}), Matrix::Zero(1, 1));
  CHECK_THROWS_AS(hamiltonian_bruteforce(spec, args, 5), UnsupportedError);
  CHECK(std::isfinite(hamiltonian(spec, args)));
}
