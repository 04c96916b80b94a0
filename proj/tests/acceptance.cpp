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

// Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sparsehjb/experiments.hpp"
#include "sparsehjb/feedback.hpp"
#include "sparsehjb/hjb_solver.hpp"
#include "sparsehjb/sde_lab.hpp"

using namespace sparsehjb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Parts>
std::string cat(const Parts&... parts) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << parts);
  return os.str();
}

Vector scalar(double x) { return Vector::Constant(1, x); }

const SpatialGrid& line_grid(int points = 401) {
  static const SpatialGrid fine(scalar(-2.0), scalar(2.0), {401});
  static const SpatialGrid coarse(scalar(-2.0), scalar(2.0), {201});
  return points == 401 ? fine : coarse;
}

ProblemSpec scalar_problem(double sigma, Penalty penalty = Penalty::kL0) {
  ScalarLinearParams p;
  p.sigma = sigma;
  return scalar_linear_problem(p, penalty);
}

// Fields shared between criteria, solved on first use.
struct Fields {
  std::shared_ptr<const ValueField> stochastic;
  SolveDiagnostics stochastic_diag;
  std::shared_ptr<const ValueField> stochastic_l1;
  std::shared_ptr<const ValueField> deterministic;
  std::shared_ptr<const ValueField> deterministic_same_steps;
  std::shared_ptr<const ValueField> deterministic_coarse;
};

Fields& fields() {
  static Fields f = [] {
    Fields out;
    out.stochastic = std::make_shared<const ValueField>(
        solve_backward(scalar_problem(0.1), line_grid(), SolverConfig{}, &out.stochastic_diag));
    out.deterministic =
        std::make_shared<const ValueField>(solve_backward(scalar_problem(0.0), line_grid(), SolverConfig{}));
    out.deterministic_coarse = std::make_shared<const ValueField>(
        solve_backward(scalar_problem(0.0), line_grid(201), SolverConfig{}));
    return out;
  }();
  return f;
}

double threshold(double s) { return 0.5 * std::exp(-2.0 * (1.0 - s)); }

std::optional<double> root_at(const FeedbackMap& map, double s) {
  return positive_root(extract_boundary(map, s, 0));
}

Outcome hamiltonian_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> entry(-10.0, 10.0);
  const ProblemSpec specs[] = {scalar_problem(0.1), lfc_problem(LfcParams{})};
  double worst = 0.0;
  for (const auto& spec : specs) {
    const int n = spec.system.state_dim;
    for (int trial = 0; trial < 1000; ++trial) {
      Vector x(n), p(n);
      Matrix m(n, n);
      for (int i = 0; i < n; ++i) {
        x[i] = entry(rng);
        p[i] = entry(rng);
        for (int j = 0; j < n; ++j) m(i, j) = entry(rng);
      }
      const HamiltonianArgs args(x, p, m);
      worst = std::max(worst, std::abs(hamiltonian(spec, args) - hamiltonian_bruteforce(spec, args, 10001)));
    }
  }
  return {worst <= 1e-9, cat("max |H - H_brute| = ", worst, " (tol 1e-09)")};
}

Outcome l0_l1_identity() {
  auto& f = fields();
  f.stochastic_l1 = std::make_shared<const ValueField>(
      solve_backward(scalar_problem(0.1, Penalty::kL1), line_grid(), SolverConfig{}));
  double worst = 0.0;
  if (f.stochastic_l1->num_slices() != f.stochastic->num_slices()) return {false, "slice count differs"};
  for (std::size_t k = 0; k < f.stochastic->num_slices(); ++k)
    worst = std::max(worst, (f.stochastic->slice(k) - f.stochastic_l1->slice(k)).cwiseAbs().maxCoeff());
  return {worst <= 1e-12, cat("max nodal |V_L0 - V_L1| = ", worst, " (tol 1e-12)")};
}

Outcome deterministic_boundary() {
  const FeedbackMap map(fields().deterministic, scalar_problem(0.0));
  const double h = line_grid().spacing(0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double s = i / 19.0;
    const auto root = root_at(map, s);
    if (!root) return {false, cat("no switching root at s = ", s)};
    worst = std::max(worst, std::abs(*root - threshold(s)));
  }
  return {worst <= 2.0 * h, cat("max |root - 0.5 exp(-2(T-s))| = ", worst, " (tol ", 2.0 * h, ")")};
}

double probe_error(const ValueField& field) {
  return std::abs(field.value_at(0.0, scalar(0.05)) - 0.0025 * std::exp(2.0));
}

double probe_residual(const ValueField& field) {
  return std::abs(hjb_residual(field, scalar_problem(0.0), 0.5, scalar(0.05)));
}

Outcome analytic_probe() {
  const auto& field = *fields().deterministic;
  const double err = probe_error(field);
  const double res = probe_residual(field);
  return {err <= 2e-3 && res <= 5e-2,
          cat("|V(0,0.05) - 0.0025 e^2| = ", err, " (tol 0.002), |residual(0.5,0.05)| = ", res,
              " (tol 0.05)")};
}

Outcome stochastic_ordering() {
  auto& f = fields();
  SolverConfig same;
  same.time_steps = f.stochastic_diag.time_steps;
  f.deterministic_same_steps =
      std::make_shared<const ValueField>(solve_backward(scalar_problem(0.0), line_grid(), same));
  const FeedbackMap sto(f.stochastic, scalar_problem(0.1));
  const FeedbackMap det(f.deterministic_same_steps, scalar_problem(0.0));
  const double h = line_grid().spacing(0);
  double worst = INFINITY;
  for (double s : f.stochastic->times()) {
    const auto a = root_at(sto, s);
    const auto b = root_at(det, s);
    if (!b) return {false, cat("no deterministic root at s = ", s)};
    const double gap = (a ? *a : INFINITY) - *b;
    worst = std::min(worst, gap);
  }
  return {worst >= -2.0 * h, cat("min over ", f.stochastic->num_slices(),
                                 " slices of (stochastic - deterministic root) = ", worst,
                                 " (tol >= ", -2.0 * h, ")")};
}

const SimulationReport& l0_report() {
  static const SimulationReport r = [] {
    const auto spec = scalar_problem(0.1);
    return monte_carlo(spec, feedback_controller(FeedbackMap(fields().stochastic, spec)), scalar(0.5),
                       0.0, 1e-3, 10000, 2024);
  }();
  return r;
}

Outcome bang_off_bang() {
  const auto& r = l0_report();
  return {r.non_vertex_controls == 0 && r.n_paths == 10000,
          cat(r.non_vertex_controls, " controls outside {-1,0,1} over ", r.n_paths, " paths")};
}

Outcome value_consistency() {
  const auto& r = l0_report();
  const double v = fields().stochastic->value_at(0.0, scalar(0.5));
  const double gap = std::abs(r.cost_l0.mean - v);
  const double tol = 3.0 * r.cost_l0.standard_error + 0.05;
  return {gap <= tol && r.exit_fraction < 0.01,
          cat("|MC ", r.cost_l0.mean, " - V(0,0.5) ", v, "| = ", gap, " (tol ", tol,
              "), exit fraction ", r.exit_fraction)};
}

Outcome sparsity_contrast() {
  const auto spec = scalar_problem(0.1);
  const auto clamped = riccati_controller(riccati_baseline(1.0, 0.1, 1.0), BoxControlSet::unit(1));
  const auto l2 = monte_carlo(spec, clamped, scalar(0.5), 0.0, 1e-3, 10000, 2024);
  const auto& l0 = l0_report();
  const bool paired = l2.noise_checksum == l0.noise_checksum;
  return {paired && l0.sparsity.mean < l2.sparsity.mean && l2.sparsity.mean >= 0.99,
          cat("nonzero fraction L0 ", l0.sparsity.mean, " < clamped L2 ", l2.sparsity.mean,
              " (L2 >= 0.99), paired noise ", paired ? "yes" : "no")};
}

Outcome lfc_ordering() {
  const SpatialGrid grid(Vector::Constant(2, -3.0), Vector::Constant(2, 3.0), {161, 161});
  LfcParams saturated;
  LfcParams linear;
  linear.d = 1e6;
  const auto spec_sat = lfc_problem(saturated);
  const auto spec_lin = lfc_problem(linear);
  const FeedbackMap sat(std::make_shared<const ValueField>(solve_backward(spec_sat, grid, SolverConfig{})),
                        spec_sat);
  const FeedbackMap lin(std::make_shared<const ValueField>(solve_backward(spec_lin, grid, SolverConfig{})),
                        spec_lin);
  const int c0 = grid.nearest_index(0, 0.0), c1 = grid.nearest_index(1, 0.0);

  // Node-wise containment on both probe lines.
  int sat_zero = 0, violations = 0;
  for (int axis = 0; axis < 2; ++axis) {
    for (int i = 0; i < grid.points(axis); ++i) {
      const std::size_t flat = axis == 0 ? grid.flat_index(i, c1) : grid.flat_index(c0, i);
      const Vector x = grid.node(flat);
      if (feedback(sat, 0.0, x)[0] == 0.0) {
        ++sat_zero;
        if (feedback(lin, 0.0, x)[0] != 0.0) ++violations;
      }
    }
  }
  // Margin at the ends of the zero interval along each ray from the origin.
  int with_margin = 0, rays = 0;
  std::ostringstream extents;
  extents.precision(4);
  for (int axis = 0; axis < 2; ++axis) {
    for (int dir : {+1, -1}) {
      const auto a = zero_region_extent(sat, 0.0, 0, axis, {c0, c1}, dir);
      const auto b = zero_region_extent(lin, 0.0, 0, axis, {c0, c1}, dir);
      ++rays;
      if (b.distance >= a.distance && b.distance - a.distance >= grid.spacing(axis)) ++with_margin;
      extents << " x" << axis + 1 << (dir > 0 ? "+" : "-") << " " << a.distance << "<" << b.distance;
    }
  }
  const bool pass = sat_zero > 0 && violations == 0 && with_margin >= 0.8 * rays;
  return {pass, cat(violations, " of ", sat_zero, " zero-control probe nodes not contained; ",
                    with_margin, "/", rays, " interval ends with >= 1 cell margin;", extents.str())};
}

Outcome scheme_convergence() {
  const auto& coarse = *fields().deterministic_coarse;
  const auto& fine = *fields().deterministic;
  const double e0 = probe_error(coarse), e1 = probe_error(fine);
  const double r0 = probe_residual(coarse), r1 = probe_residual(fine);
  const double value_ratio = e0 / e1, residual_ratio = r0 / r1;
  return {value_ratio >= 1.5 && residual_ratio >= 1.5,
          cat("value error ", e0, " -> ", e1, " (x", value_ratio, "), residual ", r0, " -> ", r1, " (x",
              residual_ratio, "), need x1.5")};
}

Outcome determinism() {
  const auto spec = scalar_problem(0.1);
  const auto again = monte_carlo(spec, feedback_controller(FeedbackMap(fields().stochastic, spec)),
                                 scalar(0.5), 0.0, 1e-3, 10000, 2024);
  const bool same = again == l0_report();
  return {same, same ? "repeated report identical" : "repeated report differs"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"hamiltonian-oracle", hamiltonian_oracle},
      {"l0-l1-field-identity", l0_l1_identity},
      {"deterministic-boundary", deterministic_boundary},
      {"analytic-value-probe", analytic_probe},
      {"stochastic-ordering", stochastic_ordering},
      {"bang-off-bang", bang_off_bang},
      {"value-consistency", value_consistency},
      {"sparsity-contrast", sparsity_contrast},
      {"lfc-ordering", lfc_ordering},
      {"scheme-convergence", scheme_convergence},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::printf("%s %2d %-24s %s [%.2fs]\n", outcome.pass ? "PASS" : "FAIL", index, name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
