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

#include "sparsehjb/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace sparsehjb {

std::string_view to_string(BoundaryPolicy policy) {
  return policy == BoundaryPolicy::kOneSided ? "one-sided" : "frozen-terminal";
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::kEno2Heun ? "eno2" : "upwind1";
}

BoundaryPolicy boundary_policy_from_string(std::string_view name) {
  if (name == "one-sided") return BoundaryPolicy::kOneSided;
  if (name == "frozen-terminal") return BoundaryPolicy::kFrozenTerminal;
  throw ConfigError("unknown boundary policy '" + std::string(name) + "'");
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "eno2") return Scheme::kEno2Heun;
  if (name == "upwind1") return Scheme::kUpwindEuler;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must be in (0,1]");
  if (time_steps && *time_steps <= 0) throw ConfigError("time_steps must be positive");
  if (max_time_steps <= 0 || steps_multiple_of <= 0 || store_every <= 0) {
    throw ConfigError("solver step limits must be positive");
  }
}

namespace {

constexpr int kPad = 2;

// Quantities that do not change in time, sampled once per node.
struct NodeCoefficients {
  int n = 1;
  int m = 1;
  std::size_t nodes = 0;
  std::vector<double> f0;       // nodes x n
  std::vector<double> fields;   // nodes x n x m, column j contiguous
  std::vector<double> cov;      // nodes x n x n
  std::vector<double> running;  // nodes
  std::vector<double> terminal; // nodes
  std::vector<double> rate;     // nodes

  const double* f0_at(std::size_t i) const { return &f0[i * n]; }
  const double* field_at(std::size_t i, int j) const { return &fields[(i * m + j) * n]; }
  double cov_at(std::size_t i, int r, int c) const { return cov[(i * n + r) * n + c]; }
};

NodeCoefficients sample_coefficients(const ProblemSpec& spec, const SpatialGrid& grid) {
  NodeCoefficients c;
  c.n = grid.dim();
  c.m = spec.system.control_dim;
  c.nodes = grid.size();
  c.f0.resize(c.nodes * c.n);
  c.fields.resize(c.nodes * c.n * c.m);
  c.cov.resize(c.nodes * c.n * c.n);
  c.running.resize(c.nodes);
  c.terminal.resize(c.nodes);
  c.rate.resize(c.nodes);
  for (std::size_t i = 0; i < c.nodes; ++i) {
    const Vector x = grid.node(i);
    const Vector f0 = spec.system.drift(x);
    const Matrix a = spec.system.covariance(x);
    for (int j = 0; j < c.m; ++j) {
      const Vector fj = spec.system.control_fields[j](x);
      for (int d = 0; d < c.n; ++d) c.fields[(i * c.m + j) * c.n + d] = fj(d);
    }
    double rate = 0.0;
    for (int d = 0; d < c.n; ++d) {
      c.f0[i * c.n + d] = f0(d);
      double drift_bound = std::abs(f0(d));
      for (int j = 0; j < c.m; ++j) {
        const double umax =
            std::max(std::abs(spec.controls.lower(j)), std::abs(spec.controls.upper(j)));
        drift_bound += umax * std::abs(c.fields[(i * c.m + j) * c.n + d]);
      }
      rate += drift_bound / grid.spacing(d) + a(d, d) / (grid.spacing(d) * grid.spacing(d));
      for (int e = 0; e < c.n; ++e) c.cov[(i * c.n + d) * c.n + e] = a(d, e);
    }
    c.rate[i] = rate;
    c.running[i] = spec.running(x);
    c.terminal[i] = spec.terminal_cost(x);
    if (!std::isfinite(rate) || !std::isfinite(c.running[i]) || !std::isfinite(c.terminal[i])) {
      std::ostringstream msg;
      msg << "non-finite coefficients at grid node " << i << " (x = " << x.transpose() << ")";
      throw ConfigError(msg.str());
    }
  }
  return c;
}

void check_cross_diffusion(const NodeCoefficients& c, const SpatialGrid& grid) {
  if (c.n != 2) return;
  const double h0 = grid.spacing(0);
  const double h1 = grid.spacing(1);
  for (std::size_t i = 0; i < c.nodes; ++i) {
    const double a01 = std::abs(c.cov_at(i, 0, 1));
    if (a01 == 0.0) continue;
    const double cross = a01 / (h0 * h1);
    const double tol = 1e-12 * cross;
    if (c.cov_at(i, 0, 0) / (h0 * h0) + tol < cross || c.cov_at(i, 1, 1) / (h1 * h1) + tol < cross) {
      std::ostringstream msg;
      msg << "diffusion is not diagonally dominant at node " << i << " (x = "
          << grid.node(i).transpose() << "): a00/h0^2 = " << c.cov_at(i, 0, 0) / (h0 * h0)
          << ", a11/h1^2 = " << c.cov_at(i, 1, 1) / (h1 * h1) << ", |a01|/(h0 h1) = " << cross
          << "; refine the grid so the cross-derivative stencil stays monotone";
      throw ConfigError(msg.str());
    }
  }
}

// Candidate controls: the box vertices, each with its penalty and per-node drift.
struct Candidates {
  std::vector<Vector> controls;
  std::vector<double> penalty;
  std::vector<double> drift;  // nodes x candidates x n
};

Candidates build_candidates(const ProblemSpec& spec, const NodeCoefficients& c) {
  Candidates cand;
  cand.controls = spec.controls.vertices();
  for (const auto& u : cand.controls) cand.penalty.push_back(penalty_value(spec.penalty, u));
  const std::size_t nc = cand.controls.size();
  cand.drift.resize(c.nodes * nc * c.n);
  for (std::size_t i = 0; i < c.nodes; ++i) {
    for (std::size_t q = 0; q < nc; ++q) {
      for (int d = 0; d < c.n; ++d) {
        double f = c.f0_at(i)[d];
        for (int j = 0; j < c.m; ++j) f += c.field_at(i, j)[d] * cand.controls[q](j);
        cand.drift[(i * nc + q) * c.n + d] = f;
      }
    }
  }
  return cand;
}

// Slice copied into an array with two ghost layers per active dimension, the ghosts
// filled by quadratic extrapolation of the three nearest interior nodes.
class PaddedSlice {
 public:
  explicit PaddedSlice(const SpatialGrid& grid) : dim_(grid.dim()) {
    n0_ = grid.points(0);
    n1_ = dim_ == 2 ? grid.points(1) : 1;
    pad1_ = dim_ == 2 ? kPad : 0;
    rows_ = n0_ + 2 * kPad;
    cols_ = n1_ + 2 * pad1_;
    data_.assign(static_cast<std::size_t>(rows_) * cols_, 0.0);
  }

  void load(const Vector& v) {
    for (int i = 0; i < n0_; ++i) {
      for (int j = 0; j < n1_; ++j) at(i + kPad, j + pad1_) = v(static_cast<Eigen::Index>(i) * n1_ + j);
    }
    for (int j = pad1_; j < pad1_ + n1_; ++j) {
      extrapolate(&at(kPad, j), cols_, n0_);
    }
    if (dim_ == 2) {
      for (int i = 0; i < rows_; ++i) extrapolate(&at(i, pad1_), 1, n1_);
    }
  }

  // Pointer to interior node (i, j) and the strides of each dimension.
  const double* node(int i, int j) const { return &data_[static_cast<std::size_t>(i + kPad) * cols_ + j + pad1_]; }
  std::ptrdiff_t stride(int d) const { return d == 0 ? cols_ : 1; }

 private:
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  // first points at interior index 0; writes ghosts at -1, -2 and n, n+1.
  static void extrapolate(double* first, std::ptrdiff_t s, int n) {
    const double v0 = first[0], v1 = first[s], v2 = first[2 * s];
    first[-s] = 3.0 * v0 - 3.0 * v1 + v2;
    first[-2 * s] = 6.0 * v0 - 8.0 * v1 + 3.0 * v2;
    double* last = first + (n - 1) * s;
    const double w0 = last[0], w1 = last[-s], w2 = last[-2 * s];
    last[s] = 3.0 * w0 - 3.0 * w1 + w2;
    last[2 * s] = 6.0 * w0 - 8.0 * w1 + 3.0 * w2;
  }

  int dim_;
  int n0_ = 0, n1_ = 1, pad1_ = 0, rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

class Stepper {
 public:
  Stepper(const ProblemSpec& spec, const SpatialGrid& grid, const SolverConfig& cfg,
          const NodeCoefficients& coeff, const Candidates& cand)
      : spec_(spec), grid_(grid), cfg_(cfg), c_(coeff), cand_(cand), padded_(grid) {}

  // Writes the discrete Hamiltonian of v into out.
  void hamiltonian(const Vector& v, Vector& out) {
    padded_.load(v);
    const int n = c_.n;
    const bool eno = cfg_.scheme == Scheme::kEno2Heun;
    const bool frozen = cfg_.boundary == BoundaryPolicy::kFrozenTerminal;
    const std::size_t nc = cand_.controls.size();
    const auto nodes = static_cast<std::ptrdiff_t>(c_.nodes);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t flat = 0; flat < nodes; ++flat) {
      const auto i = static_cast<std::size_t>(flat);
      const auto idx = grid_.multi_index(i);
      if (frozen && on_boundary(idx)) {
        out(flat) = 0.0;
        continue;
      }
      const double* p = padded_.node(idx[0], n == 2 ? idx[1] : 0);
      double fwd[2], bwd[2], ctr[2], sec[2];
      for (int d = 0; d < n; ++d) {
        const std::ptrdiff_t s = padded_.stride(d);
        const double h = grid_.spacing(d);
        const double vm2 = p[-2 * s], vm1 = p[-s], v0 = p[0], vp1 = p[s], vp2 = p[2 * s];
        const double d2c = vm1 - 2.0 * v0 + vp1;
        fwd[d] = (vp1 - v0) / h;
        bwd[d] = (v0 - vm1) / h;
        if (eno) {
          fwd[d] -= 0.5 * minmod(d2c, v0 - 2.0 * vp1 + vp2) / h;
          bwd[d] += 0.5 * minmod(d2c, vm2 - 2.0 * vm1 + v0) / h;
        }
        ctr[d] = (vp1 - vm1) / (2.0 * h);
        sec[d] = d2c / (h * h);
      }
      double diffusion = 0.0;
      for (int d = 0; d < n; ++d) diffusion += c_.cov_at(i, d, d) * sec[d];
      if (n == 2) {
        const double a01 = c_.cov_at(i, 0, 1);
        if (a01 != 0.0) {
          const std::ptrdiff_t s0 = padded_.stride(0), s1 = padded_.stride(1);
          const double axis = p[s0] + p[-s0] + p[s1] + p[-s1] - 2.0 * p[0];
          const double scale = 2.0 * grid_.spacing(0) * grid_.spacing(1);
          const double vxy = a01 > 0.0 ? (p[s0 + s1] + p[-s0 - s1] - axis) / scale
                                       : -(p[s0 - s1] + p[-s0 + s1] - axis) / scale;
          diffusion += 2.0 * a01 * vxy;
        }
      }
      const double base = -0.5 * diffusion - c_.running[i];
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < nc; ++q) {
        const double* f = &cand_.drift[(i * nc + q) * n];
        double g = base - cand_.penalty[q];
        for (int d = 0; d < n; ++d) g -= f[d] * (f[d] > 0.0 ? fwd[d] : bwd[d]);
        best = std::max(best, g);
      }
      if (spec_.penalty == Penalty::kL2Energy) {
        best = std::max(best, energy_candidate(i, base, fwd, bwd, ctr));
      }
      out(flat) = best;
    }
  }

 private:
  bool on_boundary(const std::array<int, 2>& idx) const {
    for (int d = 0; d < grid_.dim(); ++d) {
      if (idx[d] == 0 || idx[d] == grid_.points(d) - 1) return true;
    }
    return false;
  }

  // Clamped minimizer of f_j.p u + u^2 with p from centered differences.
  double energy_candidate(std::size_t i, double base, const double* fwd, const double* bwd,
                          const double* ctr) const {
    const int n = c_.n;
    double f[2] = {c_.f0_at(i)[0], n == 2 ? c_.f0_at(i)[1] : 0.0};
    double pen = 0.0;
    for (int j = 0; j < c_.m; ++j) {
      const double* fj = c_.field_at(i, j);
      double b = 0.0;
      for (int d = 0; d < n; ++d) b += fj[d] * ctr[d];
      const double u = std::clamp(-0.5 * b, spec_.controls.lower(j), spec_.controls.upper(j));
      for (int d = 0; d < n; ++d) f[d] += fj[d] * u;
      pen += u * u;
    }
    double g = base - pen;
    for (int d = 0; d < n; ++d) g -= f[d] * (f[d] > 0.0 ? fwd[d] : bwd[d]);
    return g;
  }

  const ProblemSpec& spec_;
  const SpatialGrid& grid_;
  const SolverConfig& cfg_;
  const NodeCoefficients& c_;
  const Candidates& cand_;
  PaddedSlice padded_;
};

long steps_from_rate(double max_rate, double horizon, const SolverConfig& cfg) {
  if (cfg.time_steps) {
    const long k = *cfg.time_steps;
    if (max_rate > 0.0 && horizon / static_cast<double>(k) > cfg.cfl_safety / max_rate * (1.0 + 1e-12)) {
      throw ConfigError("time_steps = " + std::to_string(k) +
                        " violates the stability bound; need at least " +
                        std::to_string(static_cast<long>(std::ceil(horizon * max_rate / cfg.cfl_safety))));
    }
    if (k > cfg.max_time_steps) {
      throw InfeasibleResolutionError("time_steps exceeds the cap of " +
                                      std::to_string(cfg.max_time_steps));
    }
    return k;
  }
  const double needed = max_rate > 0.0 ? std::ceil(horizon * max_rate / cfg.cfl_safety) : 1.0;
  if (needed > static_cast<double>(cfg.max_time_steps)) {
    throw InfeasibleResolutionError("stability bound needs " + std::to_string(needed) +
                                    " time steps, cap is " + std::to_string(cfg.max_time_steps));
  }
  long k = std::max(1L, static_cast<long>(needed));
  k = ((k + cfg.steps_multiple_of - 1) / cfg.steps_multiple_of) * cfg.steps_multiple_of;
  if (k > cfg.max_time_steps) {
    throw InfeasibleResolutionError("aligned step count exceeds the cap of " +
                                    std::to_string(cfg.max_time_steps));
  }
  return k;
}

void check_inputs(const ProblemSpec& spec, const SpatialGrid& grid, const SolverConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (spec.system.state_dim != grid.dim()) {
    throw ConfigError("system state dimension " + std::to_string(spec.system.state_dim) +
                      " does not match grid dimension " + std::to_string(grid.dim()));
  }
}

double max_rate_of(const NodeCoefficients& c) {
  return c.rate.empty() ? 0.0 : *std::max_element(c.rate.begin(), c.rate.end());
}

}  // namespace

long planned_time_steps(const ProblemSpec& spec, const SpatialGrid& grid, const SolverConfig& cfg) {
  check_inputs(spec, grid, cfg);
  const auto coeff = sample_coefficients(spec, grid);
  return steps_from_rate(max_rate_of(coeff), spec.horizon, cfg);
}

ValueField solve_backward(const ProblemSpec& spec, const SpatialGrid& grid,
                          const SolverConfig& cfg, SolveDiagnostics* diagnostics) {
  check_inputs(spec, grid, cfg);
  const auto coeff = sample_coefficients(spec, grid);
  check_cross_diffusion(coeff, grid);
  const auto cand = build_candidates(spec, coeff);

  const double max_rate = max_rate_of(coeff);
  const long steps = steps_from_rate(max_rate, spec.horizon, cfg);
  const double dt = spec.horizon / static_cast<double>(steps);

  Stepper stepper(spec, grid, cfg, coeff, cand);
  const auto nodes = static_cast<Eigen::Index>(grid.size());
  Vector v = Eigen::Map<const Vector>(coeff.terminal.data(), nodes);
  Vector h(nodes), stage(nodes);

  std::vector<double> times{spec.horizon};
  std::vector<Vector> slices{v};
  double max_abs = v.cwiseAbs().maxCoeff();

  for (long k = steps - 1; k >= 0; --k) {
    stepper.hamiltonian(v, h);
    if (cfg.scheme == Scheme::kUpwindEuler) {
      v -= dt * h;
    } else {
      stage = v - dt * h;
      stepper.hamiltonian(stage, h);
      v = 0.5 * (v + (stage - dt * h));
    }
    const double t = spec.horizon * static_cast<double>(k) / static_cast<double>(steps);
    if (!v.allFinite()) {
      Eigen::Index bad = 0;
      while (bad < nodes && std::isfinite(v(bad))) ++bad;
      std::ostringstream msg;
      msg << "solver diverged at node " << bad << " (x = "
          << grid.node(static_cast<std::size_t>(bad)).transpose() << ") at t = " << t;
      throw DivergenceError(msg.str());
    }
    max_abs = std::max(max_abs, v.cwiseAbs().maxCoeff());
    if (k == 0 || k % cfg.store_every == 0) {
      times.push_back(t);
      slices.push_back(v);
    }
  }
  std::reverse(times.begin(), times.end());
  std::reverse(slices.begin(), slices.end());

  // Discrete maximum principle bound, exact for the monotone scheme with frozen boundary.
  const double max_penalty = *std::max_element(cand.penalty.begin(), cand.penalty.end());
  double max_running = 0.0;
  for (double l : coeff.running) max_running = std::max(max_running, std::abs(l));
  double max_terminal = 0.0;
  for (double g : coeff.terminal) max_terminal = std::max(max_terminal, std::abs(g));
  const double bound = max_terminal + spec.horizon * (max_running + max_penalty);
  const bool within = max_abs <= bound * (1.0 + 1e-12) + 1e-12;
  if (!within && cfg.scheme == Scheme::kUpwindEuler &&
      cfg.boundary == BoundaryPolicy::kFrozenTerminal) {
    throw DivergenceError("monotone solve exceeded its maximum-principle bound: max|V| = " +
                          std::to_string(max_abs) + " > " + std::to_string(bound));
  }

  if (diagnostics) {
    diagnostics->time_steps = steps;
    diagnostics->dt = dt;
    diagnostics->max_rate = max_rate;
    diagnostics->max_abs_value = max_abs;
    diagnostics->stability_bound = bound;
    diagnostics->within_stability_bound = within;
  }
  return ValueField(grid, std::move(times), std::move(slices));
}

}  // namespace sparsehjb
