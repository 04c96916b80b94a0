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
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/grid.hpp"

namespace sparsehjb {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter counter, Key key);
};

/// Standard normal draws addressed by (seed, path, step, component). The same
/// address always yields the same number, whatever the evaluation order.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path_id) : seed_(seed), path_id_(path_id) {}
  /// Fills out with out.size() independent N(0,1) draws for the given step.
  void fill(std::uint64_t step, Eigen::Ref<Vector> out) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_id_;
};

/// Feedback law u = law(t, x). When domain is set and the state leaves it, the
/// simulator holds the previous control and flags the path.
struct Controller {
  std::string name;
  std::function<Vector(double, const Vector&)> law;
  std::optional<SpatialGrid> domain;
};

Controller constant_controller(Vector u);

struct SdePath {
  std::vector<double> times;     ///< N + 1 stamps
  std::vector<Vector> states;    ///< N + 1 states
  std::vector<Vector> controls;  ///< N controls, held over each step
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
  double dt = 0.0;
  bool exited_domain = false;
  std::uint64_t noise_checksum = 0;
};

/// Euler-Maruyama: x_{k+1} = x_k + f(x_k, u_k) dt + sigma(x_k) sqrt(dt) xi_k, with
/// u_k = controller(t_k, x_k). Runs from t0 to t_end (the horizon by default).
SdePath simulate(const ProblemSpec& spec, const Controller& controller, const Vector& x0,
                 double t0, double dt, std::uint64_t seed, std::uint64_t path_id = 0,
                 std::optional<double> t_end = std::nullopt);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SimulationReport {
  std::string controller;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  double t0 = 0.0;
  double dt = 0.0;
  MeanEstimate cost_l0;
  MeanEstimate cost_l1;
  MeanEstimate cost_l2;
  MeanEstimate sparsity;  ///< fraction of time-channel slots with u_j != 0
  Vector terminal_mean;
  Vector terminal_variance;
  double max_sup_norm = 0.0;
  double mean_sup_norm_p2 = 0.0;  ///< E[sup_s |x_s|^2]
  double mean_sup_norm_p4 = 0.0;  ///< E[sup_s |x_s|^4]
  double exit_fraction = 0.0;
  std::int64_t non_vertex_controls = 0;  ///< control entries outside {lo, 0, hi}
  std::uint64_t noise_checksum = 0;

  const MeanEstimate& cost(Penalty penalty) const;
  bool operator==(const SimulationReport& other) const;
};

/// Runs n_paths independent paths (path ids 0..n-1) and aggregates costs in path
/// order, so the report does not depend on the number of worker threads.
SimulationReport monte_carlo(const ProblemSpec& spec, const Controller& controller,
                             const Vector& x0, double t0, double dt, std::int64_t n_paths,
                             std::uint64_t seed);

/// Scalar LQ gain schedule for dx = (c x + u) dt + sigma dw with cost
/// E[int r u^2 ds + q_T x_T^2]: P solves -P' = 2 c P - P^2 / r, P(T) = q_T.
struct GainSchedule {
  std::vector<double> times;
  std::vector<double> gain;    ///< P(t)
  std::vector<double> offset;  ///< int_t^T sigma^2 P(s) ds, so V(t,x) = P x^2 + offset
  double control_weight = 1.0;

  double gain_at(double t) const;
  double offset_at(double t) const;
};

GainSchedule riccati_baseline(double c, double sigma, double horizon, double control_weight = 1.0,
                              double terminal_weight = 1.0, int steps = 1000);

/// u = -P(t) x / r, optionally clamped to a box.
Controller riccati_controller(const GainSchedule& schedule,
                              std::optional<BoxControlSet> clamp = std::nullopt);

/// E[sup_s |x_s|^p] / (1 + |x0|^p) for p in {2, 4}.
double moment_check(const SimulationReport& report, const Vector& x0, int p_order);

void write_path_csv(std::ostream& out, const SdePath& path);
void write_report_csv(std::ostream& out, const SimulationReport& report);

}  // namespace sparsehjb
