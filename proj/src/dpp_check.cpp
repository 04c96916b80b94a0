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

#include <algorithm>
#include <cmath>

#include "sparsehjb/hjb_solver.hpp"
#include "sparsehjb/sde_lab.hpp"

namespace sparsehjb {

DppResult dpp_check(const ValueField& field, const ProblemSpec& spec, double t, const Vector& x,
                    double tau, const std::vector<Vector>& controls_to_try,
                    const DppOptions& options) {
  if (!(t < tau) || tau > spec.horizon * (1.0 + 1e-12)) {
    throw DomainError("dpp_check needs t < tau <= T");
  }
  if (controls_to_try.empty()) throw ConfigError("dpp_check needs at least one trial control");
  if (options.n_paths < 2) throw ConfigError("dpp_check needs at least 2 paths");
  for (const auto& u : controls_to_try) {
    if (!spec.controls.contains(u)) throw DomainError("trial control outside the box");
  }
  const auto& grid = field.grid();
  DppResult result;
  result.value = field.value_at(t, x);
  result.best_estimate = std::numeric_limits<double>::infinity();

  for (const auto& u : controls_to_try) {
    const Controller ctl = constant_controller(u);
    std::vector<double> samples(static_cast<std::size_t>(options.n_paths));
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < options.n_paths; ++i) {
      const SdePath path = simulate(spec, ctl, x, t, options.dt, options.seed,
                                    static_cast<std::uint64_t>(i), tau);
      double cost = 0.0;
      for (std::size_t k = 0; k < path.controls.size(); ++k) {
        cost += (spec.running(path.states[k]) + penalty_value(spec.penalty, path.controls[k])) *
                path.dt;
      }
      // Paths that leave the grid are read at the nearest boundary point.
      Vector end = path.states.back();
      for (int d = 0; d < grid.dim(); ++d) end(d) = std::clamp(end(d), grid.lower(d), grid.upper(d));
      samples[static_cast<std::size_t>(i)] = cost + field.value_at(tau, end);
    }
    double sum = 0.0;
    for (double s : samples) sum += s;
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    double sq = 0.0;
    for (double s : samples) sq += (s - mean) * (s - mean);
    const double se = std::sqrt(sq / (n - 1.0) / n);
    if (mean < result.best_estimate) {
      result.best_estimate = mean;
      result.standard_error = se;
    }
  }
  result.defect = std::max(0.0, result.value - result.best_estimate);
  return result;
}

}  // namespace sparsehjb
