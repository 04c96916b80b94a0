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

#include "sparsehjb/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sparsehjb/config.hpp"
#include "sparsehjb/errors.hpp"
#include "sparsehjb/experiments.hpp"
#include "sparsehjb/feedback.hpp"
#include "sparsehjb/hjb_solver.hpp"
#include "sparsehjb/sde_lab.hpp"

namespace sparsehjb {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string field_path;
  std::string controller = "l0";
  std::vector<double> times;
};

ExperimentConfig load(const Options& opt) {
  RawConfig raw;
  if (!opt.config_path.empty()) raw = load_config_file(opt.config_path);
  for (const auto& o : opt.overrides) apply_override(raw, o);
  if (!opt.out_dir.empty()) apply_override(raw, "output.dir=" + opt.out_dir);
  if (opt.seed) apply_override(raw, "simulation.seed=" + std::to_string(*opt.seed));
  return interpret_config(raw);
}

// Writes to a sibling temporary file and renames it into place.
void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path field_path(const Options& opt, const ExperimentConfig& cfg) {
  if (!opt.field_path.empty()) return opt.field_path;
  return fs::path(cfg.output_dir) / "value_field.csv";
}

std::shared_ptr<const ValueField> load_field(const fs::path& path, const ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read value field '" + path.string() + "'");
  auto field = std::make_shared<const ValueField>(read_value_field(in));
  if (!(field->grid() == cfg.make_grid()))
    throw ConfigError("value field '" + path.string() + "' was solved on a different grid");
  if (std::abs(field->horizon() - cfg.horizon()) > 1e-12 * std::max(1.0, cfg.horizon()))
    throw ConfigError("value field '" + path.string() + "' has a different horizon");
  return field;
}

std::string describe_grid(const SpatialGrid& grid) {
  std::ostringstream os;
  for (int d = 0; d < grid.dim(); ++d) {
    if (d) os << " x ";
    os << "[" << grid.lower(d) << ", " << grid.upper(d) << "]/" << grid.points(d);
  }
  os << "  h=" << grid.min_spacing();
  return os.str();
}

int cmd_solve(const Options& opt, std::ostream& out) {
  const auto cfg = load(opt);
  const auto spec = cfg.make_spec();
  const auto grid = cfg.make_grid();
  const auto solver = cfg.aligned_solver();
  const auto start = std::chrono::steady_clock::now();
  SolveDiagnostics diag;
  const ValueField field = solve_backward(spec, grid, solver, &diag);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path path = fs::path(cfg.output_dir) / "value_field.csv";
  write_atomically(path, [&](std::ostream& os) { write_value_field(os, field); });

  out << std::setprecision(10);
  out << "problem      " << to_string(cfg.kind) << "  penalty " << to_string(cfg.penalty)
      << "  T=" << cfg.horizon() << "\n";
  out << "grid         " << describe_grid(grid) << "\n";
  out << "scheme       " << to_string(solver.scheme) << "  boundary " << to_string(solver.boundary)
      << "\n";
  out << "time steps   " << diag.time_steps << "  dt=" << diag.dt << "  max rate=" << diag.max_rate
      << "  cfl=" << diag.dt * diag.max_rate << "\n";
  out << "max |V|      " << diag.max_abs_value << "  stability bound " << diag.stability_bound
      << (diag.within_stability_bound ? "" : "  (exceeded)") << "\n";
  out << "V(0, x0)     " << field.value_at(0.0, cfg.x0) << "  x0=" << cfg.x0.transpose() << "\n";
  out << "wall time    " << wall << " s\n";
  out << "wrote        " << path.string() << "\n";
  return kExitOk;
}

int cmd_boundary(const Options& opt, std::ostream& out) {
  const auto cfg = load(opt);
  const auto field = load_field(field_path(opt, cfg), cfg);
  const FeedbackMap map(field, cfg.make_spec());
  const auto times = opt.times.empty() ? cfg.boundary_times : opt.times;
  std::vector<SwitchingBoundary> boundaries;
  for (double s : times) {
    if (s < 0.0 || s > cfg.horizon()) throw ConfigError("boundary time outside [0, horizon]");
    for (int j = 0; j < map.spec().system.control_dim; ++j)
      boundaries.push_back(extract_boundary(map, s, j));
  }
  std::optional<std::pair<double, double>> analytic;
  if (cfg.kind == ProblemKind::kScalarLinear) analytic = {cfg.scalar.c, cfg.horizon()};
  const fs::path path = fs::path(cfg.output_dir) / "boundary.csv";
  write_atomically(path, [&](std::ostream& os) {
    write_boundary_csv(os, boundaries, field->grid().dim(), analytic);
  });
  std::size_t empty = 0;
  for (const auto& b : boundaries) empty += b.empty() ? 1 : 0;
  out << "boundaries   " << boundaries.size() << " (" << empty << " empty)\n";
  out << "wrote        " << path.string() << "\n";
  return kExitOk;
}

Controller make_controller(const std::string& name, const ExperimentConfig& cfg,
                           const Options& opt) {
  const bool scalar = cfg.kind == ProblemKind::kScalarLinear;
  if (name == "zero") {
    auto c = constant_controller(Vector::Zero(cfg.make_spec().system.control_dim));
    c.name = "zero";
    return c;
  }
  if (name == "l0") {
    auto field = load_field(field_path(opt, cfg), cfg);
    return feedback_controller(FeedbackMap(field, cfg.make_spec(Penalty::kL0)));
  }
  if (name == "det-law") {
    if (!scalar) throw ConfigError("controller 'det-law' requires the scalar-linear problem");
    return deterministic_law_controller(cfg.scalar.c, cfg.horizon());
  }
  if (name == "l2" || name == "l2-clamped") {
    if (!scalar) throw ConfigError("controller '" + name + "' requires the scalar-linear problem");
    const auto schedule = riccati_baseline(cfg.scalar.c, cfg.scalar.sigma, cfg.horizon());
    if (name == "l2") return riccati_controller(schedule);
    return riccati_controller(schedule, BoxControlSet::unit(1));
  }
  throw ConfigError("unknown controller '" + name + "' (expected l0, l2, l2-clamped, det-law, zero)");
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  const auto cfg = load(opt);
  const auto spec = cfg.make_spec();
  const auto controller = make_controller(opt.controller, cfg, opt);
  const fs::path dir(cfg.output_dir);
  for (int i = 0; i < cfg.display_paths; ++i) {
    const auto path = simulate(spec, controller, cfg.x0, 0.0, cfg.dt, cfg.seed,
                               static_cast<std::uint64_t>(i));
    write_atomically(dir / ("path_" + opt.controller + "_" + std::to_string(i) + ".csv"),
                     [&](std::ostream& os) { write_path_csv(os, path); });
  }
  const auto report = monte_carlo(spec, controller, cfg.x0, 0.0, cfg.dt, cfg.n_paths, cfg.seed);
  const fs::path report_path = dir / ("report_" + opt.controller + ".csv");
  write_atomically(report_path, [&](std::ostream& os) { write_report_csv(os, report); });
  const auto& cost = report.cost(cfg.penalty);
  out << std::setprecision(10);
  out << "controller   " << report.controller << "  paths " << report.n_paths << "  seed "
      << report.seed << "\n";
  out << "mean cost    " << cost.mean << " +- " << cost.standard_error << " ("
      << to_string(cfg.penalty) << ")\n";
  out << "nonzero frac " << report.sparsity.mean << "\n";
  out << "exit frac    " << report.exit_fraction << "\n";
  out << "noise sum    " << std::hex << report.noise_checksum << std::dec << "\n";
  out << "wrote        " << report_path.string() << "\n";
  return kExitOk;
}

struct Verdict {
  std::string name;
  bool pass = false;
  std::string measured;
};

template <class... Parts>
std::string cat(const Parts&... parts) {
  std::ostringstream os;
  os << std::setprecision(6);
  (os << ... << parts);
  return os.str();
}

double max_abs_difference(const ValueField& a, const ValueField& b) {
  if (a.num_slices() != b.num_slices()) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.num_slices(); ++k)
    worst = std::max(worst, (a.slice(k) - b.slice(k)).cwiseAbs().maxCoeff());
  return worst;
}

double root_or_infinity(const FeedbackMap& map, double s) {
  const auto root = positive_root(extract_boundary(map, s, 0));
  return root ? *root : INFINITY;
}

void scalar_battery(const ExperimentConfig& cfg, const std::shared_ptr<const ValueField>& field,
                    SolveDiagnostics diag, std::vector<Verdict>& verdicts) {
  const auto grid = cfg.make_grid();
  const double h = grid.min_spacing();
  const double c = cfg.scalar.c;
  const double T = cfg.horizon();
  const FeedbackMap map(field, cfg.make_spec(Penalty::kL0));

  if (cfg.scalar.sigma == 0.0) {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double s = T * i / 19.0;
      const double root = root_or_infinity(map, s);
      worst = std::max(worst, std::abs(root - deterministic_scalar_threshold(s, c, T)));
    }
    verdicts.push_back({"boundary-vs-analytic", worst <= 2.0 * h,
                        cat("max |root - threshold| = ", worst, "  tol ", 2.0 * h)});
    const double threshold = deterministic_scalar_threshold(0.0, c, T);
    const double probe = threshold > 0.05 ? 0.05 : 0.5 * threshold;
    const double exact = probe * probe * std::exp(2.0 * c * T);
    const double err = std::abs(field->value_at(0.0, Vector::Constant(1, probe)) - exact);
    verdicts.push_back({"value-probe", err <= 2e-3,
                        cat("|V(0,", probe, ") - ", exact, "| = ", err, "  tol 0.002")});
  } else {
    // Deterministic companion on the same time levels.
    ScalarLinearParams det = cfg.scalar;
    det.sigma = 0.0;
    SolverConfig solver = cfg.aligned_solver();
    solver.time_steps = diag.time_steps;
    auto det_field =
        std::make_shared<const ValueField>(solve_backward(scalar_linear_problem(det), grid, solver));
    const FeedbackMap det_map(det_field, scalar_linear_problem(det));
    double worst = INFINITY;
    for (double s : field->times()) {
      const double gap = root_or_infinity(map, s) - root_or_infinity(det_map, s);
      if (!std::isnan(gap)) worst = std::min(worst, gap);
    }
    verdicts.push_back({"stochastic-zero-region-contains-deterministic", worst >= -2.0 * h,
                        cat("min (stochastic - deterministic root) = ", worst, "  tol ", -2.0 * h)});
  }
}

void lfc_battery(const ExperimentConfig& cfg, const std::shared_ptr<const ValueField>& field,
                 std::vector<Verdict>& verdicts) {
  if (cfg.lfc.d >= 1e6) return;
  const auto grid = cfg.make_grid();
  LfcParams linear = cfg.lfc;
  linear.d = 1e6;
  auto lin_field =
      std::make_shared<const ValueField>(solve_backward(lfc_problem(linear), grid, cfg.aligned_solver()));
  const FeedbackMap map(field, cfg.make_spec(Penalty::kL0));
  const FeedbackMap lin_map(lin_field, lfc_problem(linear));
  const std::array<int, 2> centre{grid.nearest_index(0, 0.0), grid.nearest_index(1, 0.0)};
  bool contained = true;
  int with_margin = 0;
  std::ostringstream detail;
  detail << std::setprecision(4);
  for (int axis = 0; axis < 2; ++axis) {
    for (int dir : {+1, -1}) {
      const auto a = zero_region_extent(map, 0.0, 0, axis, centre, dir);
      const auto b = zero_region_extent(lin_map, 0.0, 0, axis, centre, dir);
      contained = contained && b.distance >= a.distance;
      if (b.distance - a.distance >= grid.spacing(axis)) ++with_margin;
      detail << " x" << axis + 1 << (dir > 0 ? "+" : "-") << ":" << a.distance << "/"
             << b.distance;
    }
  }
  verdicts.push_back({"linear-zero-region-contains-saturated", contained && with_margin >= 4 * 0.8,
                      cat("extent d/linear", detail.str(), "  margin rays ", with_margin, "/4")});
}

int cmd_compare(const Options& opt, std::ostream& out) {
  const auto cfg = load(opt);
  if (cfg.penalty == Penalty::kL2Energy)
    throw ConfigError("compare needs a config with problem.penalty l0 or l1");
  const auto field = load_field(field_path(opt, cfg), cfg);
  const auto grid = cfg.make_grid();
  std::vector<Verdict> verdicts;

  // The L1 twin must reproduce the field exactly.
  const Penalty twin = cfg.penalty == Penalty::kL0 ? Penalty::kL1 : Penalty::kL0;
  SolveDiagnostics diag;
  const ValueField twin_field =
      solve_backward(cfg.make_spec(twin), grid, cfg.aligned_solver(), &diag);
  const double delta = max_abs_difference(*field, twin_field);
  verdicts.push_back({"l0-l1-identity", delta <= 1e-12, cat("max |dV| = ", delta, "  tol 1e-12")});

  if (cfg.kind == ProblemKind::kScalarLinear) scalar_battery(cfg, field, diag, verdicts);
  if (cfg.kind == ProblemKind::kLfc) lfc_battery(cfg, field, verdicts);

  const auto spec = cfg.make_spec(Penalty::kL0);
  const auto l0 = feedback_controller(FeedbackMap(field, spec));
  const auto report = monte_carlo(spec, l0, cfg.x0, 0.0, cfg.dt, cfg.n_paths, cfg.seed);
  const double v0 = field->value_at(0.0, cfg.x0);
  const double gap = std::abs(report.cost_l0.mean - v0);
  const double tol = 3.0 * report.cost_l0.standard_error + 0.05;
  verdicts.push_back({"monte-carlo-vs-value", gap <= tol,
                      cat("|", report.cost_l0.mean, " - ", v0, "| = ", gap, "  tol ", tol)});
  verdicts.push_back({"bang-off-bang", report.non_vertex_controls == 0,
                      cat(report.non_vertex_controls, " non-vertex controls")});

  if (cfg.kind == ProblemKind::kScalarLinear) {
    const auto baseline = make_controller("l2-clamped", cfg, opt);
    const auto l2 = monte_carlo(spec, baseline, cfg.x0, 0.0, cfg.dt, cfg.n_paths, cfg.seed);
    const bool paired = l2.noise_checksum == report.noise_checksum;
    const bool pass = paired && report.sparsity.mean < l2.sparsity.mean && l2.sparsity.mean >= 0.99;
    verdicts.push_back({"sparsity-contrast", pass,
                        cat("nonzero fraction l0 ", report.sparsity.mean, " vs l2-clamped ",
                            l2.sparsity.mean, paired ? "" : "  (noise not paired)")});
  }

  bool all = true;
  for (const auto& v : verdicts) {
    out << (v.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(48) << v.name << v.measured
        << "\n";
    all = all && v.pass;
  }
  return all ? kExitOk : kExitAcceptanceFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Sparse stochastic optimal control experiments"};
  app.name("sparsehjb");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", opt.config_path, "configuration file");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.seed, "simulation seed");
  app.add_option("--override", opt.overrides, "section.key=value, repeatable")->allow_extra_args(false);

  auto* solve = app.add_subcommand("solve", "solve the HJB equation and write the value field");
  auto* boundary = app.add_subcommand("boundary", "extract switching boundaries");
  boundary->add_option("--field", opt.field_path, "value field file");
  boundary->add_option("--times", opt.times, "boundary times");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo under a controller");
  sim->add_option("--field", opt.field_path, "value field file");
  sim->add_option("--controller", opt.controller, "l0, l2, l2-clamped, det-law or zero");
  auto* compare = app.add_subcommand("compare", "run the acceptance battery");
  compare->add_option("--field", opt.field_path, "value field file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(opt, out);
    if (boundary->parsed()) return cmd_boundary(opt, out);
    if (sim->parsed()) return cmd_simulate(opt, out);
    if (compare->parsed()) return cmd_compare(opt, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sparsehjb
