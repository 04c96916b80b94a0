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

#include "sparsehjb/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparsehjb {

Vector ControlAffineSystem::velocity(const Vector& x, const Vector& u) const {
  Vector f = drift(x);
  for (int j = 0; j < control_dim; ++j) f += control_fields[j](x) * u(j);
  return f;
}

Matrix ControlAffineSystem::control_matrix(const Vector& x) const {
  Matrix F(state_dim, control_dim);
  for (int j = 0; j < control_dim; ++j) F.col(j) = control_fields[j](x);
  return F;
}

Matrix ControlAffineSystem::covariance(const Vector& x) const {
  const Matrix sigma = diffusion(x);
  return sigma * sigma.transpose();
}

void ControlAffineSystem::validate() const {
  if (state_dim <= 0 || control_dim <= 0 || noise_dim <= 0) {
    throw ConfigError("system dimensions must be positive");
  }
  if (!drift || !diffusion) throw ConfigError("system drift and diffusion must be set");
  if (static_cast<int>(control_fields.size()) != control_dim) {
    throw ConfigError("system has " + std::to_string(control_fields.size()) +
                      " control fields, expected " + std::to_string(control_dim));
  }
  const Vector probe = Vector::Zero(state_dim);
  if (drift(probe).size() != state_dim) throw ConfigError("drift has wrong output size");
  for (const auto& fj : control_fields) {
    if (!fj || fj(probe).size() != state_dim) {
      throw ConfigError("control field has wrong output size");
    }
  }
  const Matrix sigma = diffusion(probe);
  if (sigma.rows() != state_dim || sigma.cols() != noise_dim) {
    throw ConfigError("diffusion must be " + std::to_string(state_dim) + "x" +
                      std::to_string(noise_dim));
  }
}

BoxControlSet::BoxControlSet(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw ConfigError("control bounds must be nonempty and of equal length");
  }
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (!(lower_(j) < 0.0 && 0.0 < upper_(j))) {
      throw ConfigError("control bounds must satisfy lower < 0 < upper in channel " +
                        std::to_string(j));
    }
  }
}

BoxControlSet BoxControlSet::unit(int m) {
  return BoxControlSet(Vector::Constant(m, -1.0), Vector::Constant(m, 1.0));
}

bool BoxControlSet::contains(const Vector& u, double tol) const {
  if (u.size() != lower_.size()) return false;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (!(u(j) >= lower_(j) - tol && u(j) <= upper_(j) + tol)) return false;
  }
  return true;
}

bool BoxControlSet::is_unit() const {
  return (lower_.array() == -1.0).all() && (upper_.array() == 1.0).all();
}

std::vector<Vector> BoxControlSet::vertices() const {
  const int m = size();
  int count = 1;
  for (int j = 0; j < m; ++j) count *= 3;
  std::vector<Vector> out;
  out.reserve(count);
  for (int code = 0; code < count; ++code) {
    Vector u(m);
    int rest = code;
    for (int j = 0; j < m; ++j) {
      const int digit = rest % 3;
      rest /= 3;
      u(j) = digit == 0 ? lower_(j) : (digit == 1 ? 0.0 : upper_(j));
    }
    out.push_back(std::move(u));
  }
  return out;
}

bool BoxControlSet::is_vertex(const Vector& u) const {
  if (u.size() != lower_.size()) return false;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) != lower_(j) && u(j) != 0.0 && u(j) != upper_(j)) return false;
  }
  return true;
}

std::string_view to_string(Penalty penalty) {
  switch (penalty) {
    case Penalty::kL0: return "l0";
    case Penalty::kL1: return "l1";
    case Penalty::kL2Energy: return "l2";
  }
  return "?";
}

Penalty penalty_from_string(std::string_view name) {
  if (name == "l0" || name == "L0") return Penalty::kL0;
  if (name == "l1" || name == "L1") return Penalty::kL1;
  if (name == "l2" || name == "L2" || name == "energy") return Penalty::kL2Energy;
  throw ConfigError("unknown penalty '" + std::string(name) + "' (expected l0, l1 or l2)");
}

void ProblemSpec::validate() const {
  system.validate();
  if (controls.size() != system.control_dim) {
    throw ConfigError("control box has " + std::to_string(controls.size()) +
                      " channels, system has " + std::to_string(system.control_dim));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
  if (!terminal_cost) throw ConfigError("terminal cost must be set");
}

HamiltonianArgs::HamiltonianArgs(Vector x, Vector p, const Matrix& hessian)
    : x_(std::move(x)), p_(std::move(p)), hessian_(0.5 * (hessian + hessian.transpose())) {
  if (p_.size() != x_.size() || hessian_.rows() != x_.size() || hessian_.cols() != x_.size()) {
    throw ConfigError("Hamiltonian arguments have inconsistent dimensions");
  }
}

double penalty_value(Penalty penalty, const Vector& u) {
  switch (penalty) {
    case Penalty::kL0: return psi0(u);
    case Penalty::kL1: return psi1(u);
    case Penalty::kL2Energy: return energy(u);
  }
  return 0.0;
}

namespace {

void check_interval(double lo, double hi) {
  if (!(lo < 0.0 && 0.0 < hi)) throw ConfigError("channel interval must satisfy lo < 0 < hi");
}

}  // namespace

double channel_sup_l0(double b, double lo, double hi) {
  check_interval(lo, hi);
  return std::max({0.0, -b * lo - 1.0, -b * hi - 1.0});
}

double channel_sup_l1(double b, double lo, double hi) {
  check_interval(lo, hi);
  return std::max({0.0, -b * lo - std::abs(lo), -b * hi - std::abs(hi)});
}

double channel_sup_l2(double b, double lo, double hi) {
  check_interval(lo, hi);
  const double u = std::clamp(-0.5 * b, lo, hi);
  return -b * u - u * u;
}

double channel_sup(Penalty penalty, double b, double lo, double hi) {
  switch (penalty) {
    case Penalty::kL0: return channel_sup_l0(b, lo, hi);
    case Penalty::kL1: return channel_sup_l1(b, lo, hi);
    case Penalty::kL2Energy: return channel_sup_l2(b, lo, hi);
  }
  return 0.0;
}

namespace {

void check_dims(const ProblemSpec& spec, const HamiltonianArgs& args) {
  if (args.x().size() != spec.system.state_dim) {
    throw ConfigError("state has dimension " + std::to_string(args.x().size()) +
                      ", system expects " + std::to_string(spec.system.state_dim));
  }
}

// -f0.p - tr(a M)/2 - l(x): the control-free part shared by H and G.
double control_free_part(const ProblemSpec& spec, const Vector& x, const Vector& p,
                         const Matrix& hessian) {
  const double drift = spec.system.drift(x).dot(p);
  const double diffusion = 0.5 * (spec.system.covariance(x).cwiseProduct(hessian)).sum();
  return -drift - diffusion - spec.running(x);
}

}  // namespace

double hamiltonian(const ProblemSpec& spec, const HamiltonianArgs& args) {
  check_dims(spec, args);
  double value = control_free_part(spec, args.x(), args.p(), args.hessian());
  for (int j = 0; j < spec.system.control_dim; ++j) {
    const double b = spec.system.control_fields[j](args.x()).dot(args.p());
    value += channel_sup(spec.penalty, b, spec.controls.lower(j), spec.controls.upper(j));
  }
  return value;
}

double hamiltonian_bruteforce(const ProblemSpec& spec, const HamiltonianArgs& args,
                              int grid_per_dim) {
  check_dims(spec, args);
  const int m = spec.system.control_dim;
  if (m > 3) throw UnsupportedError("brute-force Hamiltonian supports at most 3 controls");
  if (grid_per_dim < 3) throw ConfigError("brute-force grid needs at least 3 points");

  std::vector<std::vector<double>> axes(m);
  for (int j = 0; j < m; ++j) {
    const double lo = spec.controls.lower(j);
    const double hi = spec.controls.upper(j);
    auto& axis = axes[j];
    for (int i = 0; i < grid_per_dim; ++i) {
      axis.push_back(i + 1 == grid_per_dim
                         ? hi
                         : lo + (hi - lo) * static_cast<double>(i) / (grid_per_dim - 1));
    }
    axis.push_back(0.0);
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  }

  const Vector& x = args.x();
  const Vector& p = args.p();
  const Vector f0 = spec.system.drift(x);
  const Matrix F = spec.system.control_matrix(x);
  const Matrix a = spec.system.covariance(x);
  const double diffusion = 0.5 * (a.cwiseProduct(args.hessian())).sum();
  const double running = spec.running(x);

  std::vector<std::size_t> index(m, 0);
  Vector u(m);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (int j = 0; j < m; ++j) u(j) = axes[j][index[j]];
    const Vector f = f0 + F * u;
    const double g = -f.dot(p) - diffusion - running - penalty_value(spec.penalty, u);
    best = std::max(best, g);
    int j = 0;
    while (j < m && ++index[j] == axes[j].size()) index[j++] = 0;
    if (j == m) break;
  }
  return best;
}

double g_value(const ProblemSpec& spec, const Vector& x, const Vector& u, const Vector& p,
               const Matrix& hessian) {
  if (!spec.controls.contains(u, 1e-12)) throw DomainError("control outside the box");
  const Matrix sym = 0.5 * (hessian + hessian.transpose());
  return -spec.system.velocity(x, u).dot(p) -
         0.5 * (spec.system.covariance(x).cwiseProduct(sym)).sum() - spec.running(x) -
         penalty_value(spec.penalty, u);
}

}  // namespace sparsehjb
