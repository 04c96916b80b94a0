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

#include "sparsehjb/sde_lab.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sparsehjb {

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

namespace {

double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t word) {
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xFFu;
    h *= kPrime;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void NormalStream::fill(std::uint64_t step, Eigen::Ref<Vector> out) const {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  for (Eigen::Index c = 0; c < out.size(); c += 2) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(c / 2),
                                  static_cast<std::uint32_t>(path_id_),
                                  static_cast<std::uint32_t>(path_id_ >> 32)};
    const auto r = Philox4x32::block(ctr, key);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out(c) = radius * std::cos(angle);
    if (c + 1 < out.size()) out(c + 1) = radius * std::sin(angle);
  }
}

Controller constant_controller(Vector u) {
  return Controller{"constant", [u = std::move(u)](double, const Vector&) { return u; },
                    std::nullopt};
}

SdePath simulate(const ProblemSpec& spec, const Controller& controller, const Vector& x0,
                 double t0, double dt, std::uint64_t seed, std::uint64_t path_id,
                 std::optional<double> t_end) {
  const double end = t_end.value_or(spec.horizon);
  if (!(dt > 0.0)) throw ConfigError("simulation dt must be positive");
  if (!(end > t0)) throw ConfigError("simulation needs t0 < t_end");
  if (x0.size() != spec.system.state_dim) throw ConfigError("initial state has wrong dimension");
  const double span = end - t0;
  const double ratio = span / dt;
  const auto steps = static_cast<std::int64_t>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("dt does not divide the simulation window");
  }
  // The noise counter carries the step index in one 32-bit word.
  if (steps > static_cast<std::int64_t>(UINT32_MAX)) throw ConfigError("too many simulation steps");
  if (controller.domain && !controller.domain->contains(x0)) {
    throw DomainError("initial state outside the controller's grid");
  }

  SdePath path;
  path.seed = seed;
  path.path_id = path_id;
  path.dt = span / static_cast<double>(steps);
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  path.controls.reserve(steps);
  path.times.push_back(t0);
  path.states.push_back(x0);

  const NormalStream noise(seed, path_id);
  const double sqrt_dt = std::sqrt(path.dt);
  Vector xi(spec.system.noise_dim);
  std::uint64_t checksum = kFnvOffset;
  Vector x = x0;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = t0 + span * static_cast<double>(k) / static_cast<double>(steps);
    Vector u;
    if (controller.domain && !controller.domain->contains(x)) {
      path.exited_domain = true;
      u = path.controls.back();
    } else {
      u = controller.law(t, x);
    }
    noise.fill(static_cast<std::uint64_t>(k), xi);
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      checksum = fnv_mix(checksum, std::bit_cast<std::uint64_t>(xi(i)));
    }
    x = x + spec.system.velocity(x, u) * path.dt + spec.system.diffusion(x) * (sqrt_dt * xi);
    if (!x.allFinite()) {
      throw DivergenceError("simulated state became non-finite at step " + std::to_string(k));
    }
    path.controls.push_back(std::move(u));
    path.times.push_back(t0 + span * static_cast<double>(k + 1) / static_cast<double>(steps));
    path.states.push_back(x);
  }
  path.noise_checksum = checksum;
  return path;
}

const MeanEstimate& SimulationReport::cost(Penalty penalty) const {
  switch (penalty) {
    case Penalty::kL0: return cost_l0;
    case Penalty::kL1: return cost_l1;
    case Penalty::kL2Energy: return cost_l2;
  }
  return cost_l0;
}

namespace {

bool same(const MeanEstimate& a, const MeanEstimate& b) {
  return a.mean == b.mean && a.standard_error == b.standard_error;
}

struct PathSummary {
  double cost_l0 = 0.0;
  double cost_l1 = 0.0;
  double cost_l2 = 0.0;
  double on_fraction = 0.0;
  Vector terminal;
  double sup_sq = 0.0;
  bool exited = false;
  std::int64_t non_vertex = 0;
  std::uint64_t checksum = 0;
};

PathSummary summarize(const ProblemSpec& spec, const SdePath& path) {
  PathSummary s;
  KahanSum running, l0, l1, l2, on;
  const auto steps = path.controls.size();
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector& u = path.controls[k];
    running.add(spec.running(path.states[k]) * path.dt);
    l0.add(psi0(u) * path.dt);
    l1.add(psi1(u) * path.dt);
    l2.add(energy(u) * path.dt);
    on.add(psi0(u));
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const double uj = u(j);
      if (uj != 0.0 && uj != spec.controls.lower(static_cast<int>(j)) &&
          uj != spec.controls.upper(static_cast<int>(j))) {
        ++s.non_vertex;
      }
    }
  }
  const double terminal = spec.terminal_cost(path.states.back());
  s.cost_l0 = running.sum + l0.sum + terminal;
  s.cost_l1 = running.sum + l1.sum + terminal;
  s.cost_l2 = running.sum + l2.sum + terminal;
  s.on_fraction = on.sum / (static_cast<double>(spec.system.control_dim) * static_cast<double>(steps));
  s.terminal = path.states.back();
  for (const auto& x : path.states) s.sup_sq = std::max(s.sup_sq, x.squaredNorm());
  s.exited = path.exited_domain;
  s.checksum = path.noise_checksum;
  return s;
}

MeanEstimate estimate(const std::vector<PathSummary>& paths, double PathSummary::*member) {
  KahanSum sum;
  for (const auto& p : paths) sum.add(p.*member);
  const double n = static_cast<double>(paths.size());
  const double mean = sum.sum / n;
  KahanSum sq;
  for (const auto& p : paths) sq.add((p.*member - mean) * (p.*member - mean));
  const double var = paths.size() > 1 ? sq.sum / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

bool SimulationReport::operator==(const SimulationReport& o) const {
  return controller == o.controller && n_paths == o.n_paths && seed == o.seed && t0 == o.t0 &&
         dt == o.dt && same(cost_l0, o.cost_l0) && same(cost_l1, o.cost_l1) &&
         same(cost_l2, o.cost_l2) && same(sparsity, o.sparsity) &&
         terminal_mean == o.terminal_mean && terminal_variance == o.terminal_variance &&
         max_sup_norm == o.max_sup_norm && mean_sup_norm_p2 == o.mean_sup_norm_p2 &&
         mean_sup_norm_p4 == o.mean_sup_norm_p4 && exit_fraction == o.exit_fraction &&
         non_vertex_controls == o.non_vertex_controls && noise_checksum == o.noise_checksum;
}

SimulationReport monte_carlo(const ProblemSpec& spec, const Controller& controller,
                             const Vector& x0, double t0, double dt, std::int64_t n_paths,
                             std::uint64_t seed) {
  if (n_paths < 2) throw ConfigError("Monte Carlo needs at least 2 paths");
  spec.validate();
  std::vector<PathSummary> paths(static_cast<std::size_t>(n_paths));
  std::string failure;
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n_paths; ++i) {
    try {
      const SdePath path = simulate(spec, controller, x0, t0, dt, seed, static_cast<std::uint64_t>(i));
      paths[static_cast<std::size_t>(i)] = summarize(spec, path);
    } catch (const std::exception& e) {
#pragma omp critical(sparsehjb_mc_failure)
      {
        if (!failed) {
          failed = true;
          failure = "path " + std::to_string(i) + ": " + e.what();
        }
      }
    }
  }
  if (failed) throw DivergenceError("Monte Carlo failed on " + failure);

  SimulationReport report;
  report.controller = controller.name;
  report.n_paths = n_paths;
  report.seed = seed;
  report.t0 = t0;
  report.dt = dt;
  report.cost_l0 = estimate(paths, &PathSummary::cost_l0);
  report.cost_l1 = estimate(paths, &PathSummary::cost_l1);
  report.cost_l2 = estimate(paths, &PathSummary::cost_l2);
  report.sparsity = estimate(paths, &PathSummary::on_fraction);

  const auto n = static_cast<double>(n_paths);
  const int dim = spec.system.state_dim;
  report.terminal_mean = Vector::Zero(dim);
  report.terminal_variance = Vector::Zero(dim);
  for (int d = 0; d < dim; ++d) {
    KahanSum sum;
    for (const auto& p : paths) sum.add(p.terminal(d));
    const double mean = sum.sum / n;
    KahanSum sq;
    for (const auto& p : paths) sq.add((p.terminal(d) - mean) * (p.terminal(d) - mean));
    report.terminal_mean(d) = mean;
    report.terminal_variance(d) = sq.sum / (n - 1.0);
  }
  KahanSum p2, p4;
  std::int64_t exits = 0;
  std::uint64_t checksum = kFnvOffset;
  for (const auto& p : paths) {
    report.max_sup_norm = std::max(report.max_sup_norm, std::sqrt(p.sup_sq));
    p2.add(p.sup_sq);
    p4.add(p.sup_sq * p.sup_sq);
    exits += p.exited ? 1 : 0;
    report.non_vertex_controls += p.non_vertex;
    checksum = fnv_mix(checksum, p.checksum);
  }
  report.mean_sup_norm_p2 = p2.sum / n;
  report.mean_sup_norm_p4 = p4.sum / n;
  report.exit_fraction = static_cast<double>(exits) / n;
  report.noise_checksum = checksum;
  return report;
}

double GainSchedule::gain_at(double t) const {
  if (t <= times.front()) return gain.front();
  if (t >= times.back()) return gain.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - w) * gain[k] + w * gain[k + 1];
}

double GainSchedule::offset_at(double t) const {
  if (t <= times.front()) return offset.front();
  if (t >= times.back()) return offset.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - w) * offset[k] + w * offset[k + 1];
}

GainSchedule riccati_baseline(double c, double sigma, double horizon, double control_weight,
                              double terminal_weight, int steps) {
  if (!(horizon > 0.0)) throw ConfigError("Riccati horizon must be positive");
  if (!(control_weight > 0.0)) throw ConfigError("Riccati control weight must be positive");
  if (steps < 1000) throw ConfigError("Riccati integration needs at least 1000 steps");
  // State (P, offset) in reverse time s = T - t: dP/ds = 2cP - P^2/r, d(offset)/ds = sigma^2 P.
  const double r = control_weight;
  const double s2 = sigma * sigma;
  auto rhs = [&](const Eigen::Vector2d& y) {
    return Eigen::Vector2d(2.0 * c * y(0) - y(0) * y(0) / r, s2 * y(0));
  };
  const double h = horizon / steps;
  GainSchedule out;
  out.control_weight = r;
  out.times.resize(steps + 1);
  out.gain.resize(steps + 1);
  out.offset.resize(steps + 1);
  Eigen::Vector2d y(terminal_weight, 0.0);
  out.times[steps] = horizon;
  out.gain[steps] = y(0);
  out.offset[steps] = y(1);
  for (int k = steps - 1; k >= 0; --k) {
    const Eigen::Vector2d k1 = rhs(y);
    const Eigen::Vector2d k2 = rhs(y + 0.5 * h * k1);
    const Eigen::Vector2d k3 = rhs(y + 0.5 * h * k2);
    const Eigen::Vector2d k4 = rhs(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) {
      throw DivergenceError("Riccati solution blew up; horizon too long for these weights");
    }
    out.times[k] = horizon * static_cast<double>(k) / steps;
    out.gain[k] = y(0);
    out.offset[k] = y(1);
  }
  return out;
}

Controller riccati_controller(const GainSchedule& schedule, std::optional<BoxControlSet> clamp) {
  Controller ctl;
  ctl.name = clamp ? "l2-clamped" : "l2";
  ctl.law = [schedule, clamp](double t, const Vector& x) {
    Vector u = -schedule.gain_at(t) / schedule.control_weight * x;
    if (clamp) u = u.cwiseMax(clamp->lower()).cwiseMin(clamp->upper());
    return u;
  };
  return ctl;
}

double moment_check(const SimulationReport& report, const Vector& x0, int p_order) {
  const double r2 = x0.squaredNorm();
  if (p_order == 2) return report.mean_sup_norm_p2 / (1.0 + r2);
  if (p_order == 4) return report.mean_sup_norm_p4 / (1.0 + r2 * r2);
  throw ConfigError("moment order must be 2 or 4");
}

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_path_csv(std::ostream& out, const SdePath& path) {
  const auto n = path.states.front().size();
  const auto m = path.controls.empty() ? Eigen::Index{0} : path.controls.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  for (Eigen::Index j = 0; j < m; ++j) out << ",u" << j + 1;
  out << ",flag\n";
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    out << num(path.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << num(path.states[k](i));
    for (Eigen::Index j = 0; j < m; ++j) {
      // The last state has no control of its own; repeat the final one.
      const auto& u = path.controls[std::min(k, path.controls.size() - 1)];
      out << ',' << num(u(j));
    }
    out << ',' << (path.exited_domain ? 1 : 0) << '\n';
  }
}

void write_report_csv(std::ostream& out, const SimulationReport& r) {
  out << "controller,n_paths,seed,t0,dt,cost_l0,cost_l0_se,cost_l1,cost_l1_se,cost_l2,cost_l2_se,"
         "sparsity_fraction,sparsity_se";
  for (Eigen::Index d = 0; d < r.terminal_mean.size(); ++d) {
    out << ",terminal_mean_" << d + 1 << ",terminal_var_" << d + 1;
  }
  out << ",max_sup_norm,mean_sup_norm_p2,mean_sup_norm_p4,exit_fraction,non_vertex_controls,"
         "noise_checksum\n";
  out << r.controller << ',' << r.n_paths << ',' << r.seed << ',' << num(r.t0) << ','
      << num(r.dt) << ',' << num(r.cost_l0.mean) << ',' << num(r.cost_l0.standard_error) << ','
      << num(r.cost_l1.mean) << ',' << num(r.cost_l1.standard_error) << ','
      << num(r.cost_l2.mean) << ',' << num(r.cost_l2.standard_error) << ','
      << num(r.sparsity.mean) << ',' << num(r.sparsity.standard_error);
  for (Eigen::Index d = 0; d < r.terminal_mean.size(); ++d) {
    out << ',' << num(r.terminal_mean(d)) << ',' << num(r.terminal_variance(d));
  }
  out << ',' << num(r.max_sup_norm) << ',' << num(r.mean_sup_norm_p2) << ','
      << num(r.mean_sup_norm_p4) << ',' << num(r.exit_fraction) << ',' << r.non_vertex_controls
      << ',' << r.noise_checksum << '\n';
}

}  // namespace sparsehjb
