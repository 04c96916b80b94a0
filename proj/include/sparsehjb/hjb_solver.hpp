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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/grid.hpp"

namespace sparsehjb {

/// Value-function samples V(t_k, x_i) on a spatial grid, one slice per stored time.
/// Times are stored in increasing order; the last slice is the terminal data.
class ValueField {
 public:
  ValueField() = default;
  ValueField(SpatialGrid grid, std::vector<double> times, std::vector<Vector> slices);

  const SpatialGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const Vector& slice(std::size_t k) const { return slices_[k]; }
  std::size_t num_slices() const { return slices_.size(); }
  double horizon() const { return times_.back(); }

  /// Index of the stored slice nearest to t; DomainError outside [t0, T].
  std::size_t nearest_slice(double t) const;

  /// Multilinear interpolation of the snapped slice.
  double value_at(double t, const Vector& x) const;

  /// Centered differences at interior nodes, second-order one-sided at the boundary.
  Vector nodal_gradient(std::size_t k, std::size_t flat) const;
  /// Centered second differences; the stencil is shifted inward at boundary nodes.
  Matrix nodal_hessian(std::size_t k, std::size_t flat) const;

  bool operator==(const ValueField& other) const;

 private:
  SpatialGrid grid_;
  std::vector<double> times_;
  std::vector<Vector> slices_;
};

void write_value_field(std::ostream& out, const ValueField& field);
ValueField read_value_field(std::istream& in);

enum class BoundaryPolicy { kOneSided, kFrozenTerminal };
enum class Scheme {
  kEno2Heun,     ///< minmod-limited second-order upwind differences, Heun time stepping
  kUpwindEuler,  ///< first-order monotone upwind differences, explicit Euler
};

std::string_view to_string(BoundaryPolicy policy);
std::string_view to_string(Scheme scheme);
BoundaryPolicy boundary_policy_from_string(std::string_view name);
Scheme scheme_from_string(std::string_view name);

struct SolverConfig {
  std::optional<long> time_steps;  ///< empty: choose from the stability bound
  BoundaryPolicy boundary = BoundaryPolicy::kOneSided;
  Scheme scheme = Scheme::kEno2Heun;
  double cfl_safety = 0.5;
  long max_time_steps = 10'000'000;
  /// Automatic step counts are rounded up to a multiple of this value so that
  /// simulation steps land on stored slices.
  long steps_multiple_of = 1;
  /// Keep every n-th slice (the first and terminal slices are always kept).
  long store_every = 1;

  void validate() const;
};

struct SolveDiagnostics {
  long time_steps = 0;
  double dt = 0.0;
  double max_rate = 0.0;  ///< max over nodes of sum |drift|/h + sum a_ii/h^2
  double max_abs_value = 0.0;
  double stability_bound = 0.0;
  bool within_stability_bound = true;
};

/// Marches -v_t + H(x, Dv, D^2v) = 0 backward from v(T) = g. Controls are taken over
/// the vertices of the box (plus the clamped quadratic optimum for the energy
/// penalty); each candidate picks its own upwind direction from its drift.
ValueField solve_backward(const ProblemSpec& spec, const SpatialGrid& grid,
                          const SolverConfig& cfg, SolveDiagnostics* diagnostics = nullptr);

/// Time steps the solver would use for this problem.
long planned_time_steps(const ProblemSpec& spec, const SpatialGrid& grid, const SolverConfig& cfg);

Vector gradient_at(const ValueField& field, double t, const Vector& x);
Matrix hessian_at(const ValueField& field, double t, const Vector& x);

/// -v_t + H at (t, x) with centered differences on the stored field. Needs a slice
/// strictly inside the time window and x at least two nodes from the boundary.
double hjb_residual(const ValueField& field, const ProblemSpec& spec, double t, const Vector& x);

struct DppOptions {
  double dt = 1e-3;
  int n_paths = 2000;
  std::uint64_t seed = 1;
};

struct DppResult {
  double defect = 0.0;          ///< max(0, V(t,x) - min_u E[...])
  double best_estimate = 0.0;   ///< min over trial controls of the Monte Carlo estimate
  double standard_error = 0.0;  ///< of the minimizing estimate
  double value = 0.0;           ///< V(t, x)
};

/// Dynamic-programming consistency: V(t,x) <= E[int_t^tau psi(u) ds + V(tau, x_tau)]
/// for every constant control u; reports how far the field violates it.
DppResult dpp_check(const ValueField& field, const ProblemSpec& spec, double t, const Vector& x,
                    double tau, const std::vector<Vector>& controls_to_try,
                    const DppOptions& options = {});

}  // namespace sparsehjb
