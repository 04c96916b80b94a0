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

#include <Eigen/Dense>

#include <functional>
#include <string_view>
#include <vector>

#include "sparsehjb/errors.hpp"

namespace sparsehjb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;

/// Control-affine diffusion dx = (f0(x) + sum_j f_j(x) u_j) dt + sigma(x) dw.
/// The diffusion takes only the state, so it cannot depend on the control.
struct ControlAffineSystem {
  int state_dim = 1;
  int control_dim = 1;
  int noise_dim = 1;
  VectorField drift;
  std::vector<VectorField> control_fields;
  MatrixField diffusion;

  /// f(x, u) = f0(x) + F(x) u.
  Vector velocity(const Vector& x, const Vector& u) const;
  /// n x m matrix whose columns are the control fields f_j(x).
  Matrix control_matrix(const Vector& x) const;
  /// sigma(x) sigma(x)^T.
  Matrix covariance(const Vector& x) const;

  void validate() const;
};

/// Box U_1 x ... x U_m with U_j = [lower_j, upper_j] and lower_j < 0 < upper_j.
class BoxControlSet {
 public:
  BoxControlSet() = default;
  BoxControlSet(Vector lower, Vector upper);

  static BoxControlSet unit(int m);

  int size() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double lower(int j) const { return lower_(j); }
  double upper(int j) const { return upper_(j); }

  bool contains(const Vector& u, double tol = 1e-12) const;
  /// True when every bound is exactly -1 or +1.
  bool is_unit() const;
  /// All 3^m points of prod_j {lower_j, 0, upper_j}, channel 0 varying fastest.
  std::vector<Vector> vertices() const;
  /// True when u_j is exactly one of {lower_j, 0, upper_j} for every j.
  bool is_vertex(const Vector& u) const;

 private:
  Vector lower_;
  Vector upper_;
};

enum class Penalty { kL0, kL1, kL2Energy };

std::string_view to_string(Penalty penalty);
Penalty penalty_from_string(std::string_view name);

/// Finite-horizon problem: minimize E[ int_t^T (l(x) + psi(u)) ds + g(x_T) ].
struct ProblemSpec {
  ControlAffineSystem system;
  BoxControlSet controls;
  double horizon = 1.0;
  ScalarField terminal_cost;
  ScalarField running_cost;  ///< empty means l = 0
  Penalty penalty = Penalty::kL0;

  double running(const Vector& x) const { return running_cost ? running_cost(x) : 0.0; }
  void validate() const;
};

/// (x, p, M) with M symmetrized on construction.
class HamiltonianArgs {
 public:
  HamiltonianArgs(Vector x, Vector p, const Matrix& hessian);

  const Vector& x() const { return x_; }
  const Vector& p() const { return p_; }
  const Matrix& hessian() const { return hessian_; }

 private:
  Vector x_;
  Vector p_;
  Matrix hessian_;
};

/// Number of nonzero entries; exact comparison with zero.
template <typename Derived>
double psi0(const Eigen::MatrixBase<Derived>& u) {
  double count = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) != 0.0) count += 1.0;
  }
  return count;
}

template <typename Derived>
double psi1(const Eigen::MatrixBase<Derived>& u) {
  return u.template lpNorm<1>();
}

template <typename Derived>
double energy(const Eigen::MatrixBase<Derived>& u) {
  return u.squaredNorm();
}

double penalty_value(Penalty penalty, const Vector& u);

// Per-channel suprema of -b u - phi(u) over u in [lo, hi], lo < 0 < hi.
double channel_sup_l0(double b, double lo, double hi);
double channel_sup_l1(double b, double lo, double hi);
double channel_sup_l2(double b, double lo, double hi);
double channel_sup(Penalty penalty, double b, double lo, double hi);

/// H(x,p,M) = -f0.p - tr(sigma sigma^T M)/2 - l(x) + sum_j channel_sup(f_j.p).
double hamiltonian(const ProblemSpec& spec, const HamiltonianArgs& args);

/// Maximizes G over a tensor grid of each channel interval that always contains
/// {lo, 0, hi}. Intended as an oracle for hamiltonian(); requires m <= 3.
double hamiltonian_bruteforce(const ProblemSpec& spec, const HamiltonianArgs& args,
                              int grid_per_dim);

/// G(x,u,p,M) = -f(x,u).p - tr(sigma sigma^T M)/2 - l(x) - psi(u).
double g_value(const ProblemSpec& spec, const Vector& x, const Vector& u, const Vector& p,
               const Matrix& hessian);

}  // namespace sparsehjb
