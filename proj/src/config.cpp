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

#include "sparsehjb/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sparsehjb/errors.hpp"

namespace sparsehjb {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "problem.type",        "problem.penalty",      "problem.horizon",
      "scalar-linear.c",     "scalar-linear.sigma",  "scalar-linear.x0",
      "lfc.p",               "lfc.k",                "lfc.sigma",
      "lfc.d",               "lfc.x0",               "custom.dim",
      "custom.controls",     "custom.noise",         "custom.drift_matrix",
      "custom.drift_offset", "custom.control_matrix", "custom.diffusion",
      "custom.terminal_quadratic", "custom.terminal_linear", "custom.terminal_constant",
      "custom.running_quadratic", "custom.control_lower", "custom.control_upper",
      "custom.x0",           "grid.lower",           "grid.upper",
      "grid.points",         "solver.time_steps",    "solver.scheme",
      "solver.boundary",     "solver.cfl_safety",    "solver.max_time_steps",
      "solver.store_every",  "simulation.dt",        "simulation.n_paths",
      "simulation.display_paths", "simulation.seed", "boundary.times",
      "boundary.count",      "output.dir"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string where(const std::string& key, const RawConfig::Entry& e) {
  std::ostringstream os;
  if (e.line > 0) os << "line " << e.line << ": ";
  else os << "override: ";
  os << "key '" << key << "'";
  return os.str();
}

[[noreturn]] void bad_value(const std::string& key, const RawConfig::Entry& e,
                            const std::string& what) {
  throw ConfigError(where(key, e) + ": " + what + " (got '" + e.value + "')");
}

bool parse_plain_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Accepts plain decimals and simple fractions such as 1/3.
bool parse_number(std::string_view s, double& out) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_plain_double(s, out);
  double num = 0.0, den = 0.0;
  if (!parse_plain_double(s.substr(0, slash), num) ||
      !parse_plain_double(s.substr(slash + 1), den) || den == 0.0)
    return false;
  out = num / den;
  return true;
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const RawConfig::Entry* find(const std::string& key) const {
    const auto it = raw_.entries.find(key);
    return it == raw_.entries.end() ? nullptr : &it->second;
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string text(const std::string& key, std::string fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    if (e->value.empty()) bad_value(key, *e, "expected a value");
    return e->value;
  }

  double number(const std::string& key, double fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    double v = 0.0;
    if (!parse_number(e->value, v)) bad_value(key, *e, "expected a number");
    return v;
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (const auto* e = find(key); e && !(v > 0.0)) bad_value(key, *e, "expected a positive number");
    return v;
  }

  long long integer(const std::string& key, long long fallback, long long min_value) const {
    const auto* e = find(key);
    if (!e) return fallback;
    long long v = 0;
    const auto& s = e->value;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, *e, "expected an integer");
    if (v < min_value)
      bad_value(key, *e, "expected an integer >= " + std::to_string(min_value));
    return v;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto& s = e->value;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      bad_value(key, *e, "expected an unsigned 64-bit integer");
    return v;
  }

  Vector vector(const std::string& key, const Vector& fallback, int expected = -1) const {
    const auto* e = find(key);
    if (!e) return fallback;
    const auto tokens = split_tokens(e->value);
    Vector v(static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (!parse_number(tokens[i], v[static_cast<Eigen::Index>(i)]))
        bad_value(key, *e, "expected a list of numbers");
    if (tokens.empty()) bad_value(key, *e, "expected a list of numbers");
    if (expected >= 0 && v.size() != expected)
      bad_value(key, *e, "expected " + std::to_string(expected) + " numbers");
    return v;
  }

  // Rows separated by ';', entries by spaces or commas.
  Matrix matrix(const std::string& key, const Matrix& fallback, int rows, int cols) const {
    const auto* e = find(key);
    if (!e) return fallback;
    std::vector<std::vector<double>> parsed;
    std::stringstream ss(e->value);
    std::string row;
    while (std::getline(ss, row, ';')) {
      std::vector<double> values;
      for (const auto& tok : split_tokens(row)) {
        double v = 0.0;
        if (!parse_number(tok, v)) bad_value(key, *e, "expected a matrix of numbers");
        values.push_back(v);
      }
      parsed.push_back(std::move(values));
    }
    if (static_cast<int>(parsed.size()) != rows)
      bad_value(key, *e, "expected " + std::to_string(rows) + " rows separated by ';'");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      if (static_cast<int>(parsed[r].size()) != cols)
        bad_value(key, *e, "expected " + std::to_string(cols) + " entries in row " +
                               std::to_string(r + 1));
      for (int c = 0; c < cols; ++c) m(r, c) = parsed[r][c];
    }
    return m;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    if (const auto* e = find(key)) bad_value(key, *e, what);
    throw ConfigError("key '" + key + "': " + what);
  }

 private:
  const RawConfig& raw_;
};

void check_known(const std::string& key, const RawConfig::Entry& e) {
  if (!known_keys().count(key)) throw ConfigError(where(key, e) + ": unknown key");
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kScalarLinear: return "scalar-linear";
    case ProblemKind::kLfc: return "lfc";
    case ProblemKind::kCustom: return "custom";
  }
  return "?";
}

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' starts a comment anywhere; ';' only at line start since it also separates matrix rows.
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? std::string_view(line)
                                                             : std::string_view(line).substr(0, hash));
    if (!body.empty() && body.front() == ';') continue;
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3)
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string name = trim(std::string_view(body).substr(0, eq));
    if (name.empty()) throw ConfigError("line " + std::to_string(lineno) + ": missing key");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + name +
                        "' appears before any section");
    const std::string key = section + "." + name;
    RawConfig::Entry entry{trim(std::string_view(body).substr(eq + 1)), lineno};
    check_known(key, entry);
    if (raw.entries.count(key))
      throw ConfigError(where(key, entry) + ": duplicate key (first set on line " +
                        std::to_string(raw.entries[key].line) + ")");
    raw.entries[key] = std::move(entry);
  }
  return raw;
}

RawConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(RawConfig& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "': expected section.key=value");
  const std::string key = trim(std::string_view(assignment).substr(0, eq));
  RawConfig::Entry entry{trim(std::string_view(assignment).substr(eq + 1)), 0};
  check_known(key, entry);
  raw.entries[key] = std::move(entry);
}

ExperimentConfig interpret_config(const RawConfig& raw) {
  const Reader r(raw);
  ExperimentConfig cfg;

  const std::string type = r.text("problem.type", "scalar-linear");
  if (type == "scalar-linear") cfg.kind = ProblemKind::kScalarLinear;
  else if (type == "lfc") cfg.kind = ProblemKind::kLfc;
  else if (type == "custom") cfg.kind = ProblemKind::kCustom;
  else r.fail("problem.type", "expected scalar-linear, lfc or custom");

  try {
    cfg.penalty = penalty_from_string(r.text("problem.penalty", "l0"));
  } catch (const ConfigError&) {
    r.fail("problem.penalty", "expected l0, l1 or l2");
  }

  // Sections belonging to other problem types are rejected rather than ignored.
  for (const auto& [key, entry] : raw.entries) {
    const auto section = key.substr(0, key.find('.'));
    const bool foreign = (section == "scalar-linear" && cfg.kind != ProblemKind::kScalarLinear) ||
                         (section == "lfc" && cfg.kind != ProblemKind::kLfc) ||
                         (section == "custom" && cfg.kind != ProblemKind::kCustom);
    if (foreign) bad_value(key, entry, "section does not apply to problem type '" + type + "'");
  }

  int dim = 1;
  switch (cfg.kind) {
    case ProblemKind::kScalarLinear: {
      cfg.scalar.c = r.number("scalar-linear.c", 1.0);
      cfg.scalar.sigma = r.number("scalar-linear.sigma", 0.1);
      if (cfg.scalar.sigma < 0.0) r.fail("scalar-linear.sigma", "expected a non-negative number");
      cfg.scalar.horizon = r.positive("problem.horizon", 1.0);
      cfg.x0 = r.vector("scalar-linear.x0", Vector::Constant(1, 0.5), 1);
      cfg.grid_lower = Vector::Constant(1, -2.0);
      cfg.grid_upper = Vector::Constant(1, 2.0);
      cfg.grid_points = {401};
      cfg.boundary_times.clear();
      for (int i = 0; i < 50; ++i) cfg.boundary_times.push_back(cfg.scalar.horizon * i / 49.0);
      break;
    }
    case ProblemKind::kLfc: {
      dim = 2;
      cfg.lfc.p = r.number("lfc.p", 1.0 / 3.0);
      cfg.lfc.k = r.number("lfc.k", 2.0);
      cfg.lfc.sigma = r.number("lfc.sigma", 0.5);
      cfg.lfc.d = r.positive("lfc.d", 0.4);
      if (cfg.lfc.sigma < 0.0) r.fail("lfc.sigma", "expected a non-negative number");
      cfg.lfc.horizon = r.positive("problem.horizon", 0.5);
      Vector x0_default(2);
      x0_default << 1.0, 0.0;
      cfg.x0 = r.vector("lfc.x0", x0_default, 2);
      cfg.grid_lower = Vector::Constant(2, -3.0);
      cfg.grid_upper = Vector::Constant(2, 3.0);
      cfg.grid_points = {161, 161};
      cfg.solver.store_every = 25;
      cfg.boundary_times = {0.0};
      break;
    }
    case ProblemKind::kCustom: {
      dim = static_cast<int>(r.integer("custom.dim", 1, 1));
      if (dim > 2) r.fail("custom.dim", "grids support 1 or 2 state dimensions");
      const int m = static_cast<int>(r.integer("custom.controls", 1, 1));
      const int noise = static_cast<int>(r.integer("custom.noise", 1, 0));
      auto& c = cfg.custom;
      c.drift_matrix = r.matrix("custom.drift_matrix", Matrix::Zero(dim, dim), dim, dim);
      c.drift_offset = r.vector("custom.drift_offset", Vector::Zero(dim), dim);
      if (!r.has("custom.control_matrix")) r.fail("custom.control_matrix", "required for custom problems");
      c.control_matrix = r.matrix("custom.control_matrix", Matrix(), dim, m);
      c.diffusion = r.matrix("custom.diffusion", Matrix::Zero(dim, noise), dim, noise);
      c.terminal_quadratic =
          r.matrix("custom.terminal_quadratic", Matrix::Zero(dim, dim), dim, dim);
      c.terminal_linear = r.vector("custom.terminal_linear", Vector::Zero(dim), dim);
      c.terminal_constant = r.number("custom.terminal_constant", 0.0);
      c.running_quadratic = r.matrix("custom.running_quadratic", Matrix::Zero(dim, dim), dim, dim);
      const Vector lo = r.vector("custom.control_lower", Vector::Constant(m, -1.0), m);
      const Vector hi = r.vector("custom.control_upper", Vector::Constant(m, 1.0), m);
      try {
        c.controls = BoxControlSet(lo, hi);
      } catch (const ConfigError& e) {
        r.fail("custom.control_lower", e.what());
      }
      c.horizon = r.positive("problem.horizon", 1.0);
      cfg.x0 = r.vector("custom.x0", Vector::Zero(dim), dim);
      cfg.grid_lower = Vector::Constant(dim, -2.0);
      cfg.grid_upper = Vector::Constant(dim, 2.0);
      cfg.grid_points.assign(dim, dim == 1 ? 401 : 101);
      cfg.boundary_times = {0.0};
      break;
    }
  }

  cfg.grid_lower = r.vector("grid.lower", cfg.grid_lower, dim);
  cfg.grid_upper = r.vector("grid.upper", cfg.grid_upper, dim);
  if (const auto* e = r.find("grid.points")) {
    const auto tokens = split_tokens(e->value);
    if (static_cast<int>(tokens.size()) != dim)
      bad_value("grid.points", *e, "expected " + std::to_string(dim) + " integers");
    cfg.grid_points.clear();
    for (const auto& tok : tokens) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || v < SpatialGrid::kMinPointsPerDim)
        bad_value("grid.points", *e,
                  "expected integers >= " + std::to_string(SpatialGrid::kMinPointsPerDim));
      cfg.grid_points.push_back(v);
    }
  }
  for (int d = 0; d < dim; ++d)
    if (!(cfg.grid_lower[d] < cfg.grid_upper[d])) r.fail("grid.upper", "must exceed grid.lower");

  if (const auto* e = r.find("solver.time_steps"); e && e->value != "auto")
    cfg.solver.time_steps = r.integer("solver.time_steps", 0, 1);
  try {
    cfg.solver.scheme = scheme_from_string(r.text("solver.scheme", "eno2"));
  } catch (const ConfigError&) {
    r.fail("solver.scheme", "expected eno2 or upwind1");
  }
  try {
    cfg.solver.boundary = boundary_policy_from_string(r.text("solver.boundary", "one-sided"));
  } catch (const ConfigError&) {
    r.fail("solver.boundary", "expected one-sided or frozen-terminal");
  }
  cfg.solver.cfl_safety = r.positive("solver.cfl_safety", cfg.solver.cfl_safety);
  if (cfg.solver.cfl_safety > 1.0) r.fail("solver.cfl_safety", "expected a value in (0, 1]");
  cfg.solver.max_time_steps = r.integer("solver.max_time_steps", cfg.solver.max_time_steps, 1);
  cfg.solver.store_every = r.integer("solver.store_every", cfg.solver.store_every, 1);

  cfg.dt = r.positive("simulation.dt", 1e-3);
  cfg.n_paths = r.integer("simulation.n_paths", cfg.n_paths, 2);
  cfg.display_paths = static_cast<int>(r.integer("simulation.display_paths", cfg.display_paths, 0));
  cfg.seed = r.unsigned64("simulation.seed", cfg.seed);
  const double T = cfg.horizon();
  const double ratio = T / cfg.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    r.fail("simulation.dt", "must divide the horizon into a whole number of steps");

  if (r.has("boundary.times") && r.has("boundary.count"))
    r.fail("boundary.count", "give either boundary.times or boundary.count");
  if (r.has("boundary.times")) {
    const Vector times = r.vector("boundary.times", Vector());
    cfg.boundary_times.assign(times.data(), times.data() + times.size());
  } else if (r.has("boundary.count")) {
    const auto n = r.integer("boundary.count", 1, 1);
    cfg.boundary_times.clear();
    for (long long i = 0; i < n; ++i)
      cfg.boundary_times.push_back(n == 1 ? 0.0 : T * static_cast<double>(i) / (n - 1));
  }
  for (double s : cfg.boundary_times)
    if (s < 0.0 || s > T) r.fail("boundary.times", "times must lie in [0, horizon]");

  cfg.output_dir = r.text("output.dir", cfg.output_dir);

  try {
    cfg.make_grid().require_contains(cfg.x0);
  } catch (const DomainError&) {
    const std::string key = std::string(to_string(cfg.kind)) + ".x0";
    r.fail(key, "initial state lies outside the grid");
  }
  return cfg;
}

double ExperimentConfig::horizon() const {
  switch (kind) {
    case ProblemKind::kScalarLinear: return scalar.horizon;
    case ProblemKind::kLfc: return lfc.horizon;
    case ProblemKind::kCustom: return custom.horizon;
  }
  return 0.0;
}

ProblemSpec ExperimentConfig::make_spec(Penalty penalty_override) const {
  switch (kind) {
    case ProblemKind::kScalarLinear: return scalar_linear_problem(scalar, penalty_override);
    case ProblemKind::kLfc: return lfc_problem(lfc, penalty_override);
    case ProblemKind::kCustom: return custom_problem(custom, penalty_override);
  }
  throw ConfigError("unknown problem kind");
}

SpatialGrid ExperimentConfig::make_grid() const {
  return SpatialGrid(grid_lower, grid_upper, grid_points);
}

SolverConfig ExperimentConfig::aligned_solver() const {
  SolverConfig out = solver;
  if (!out.time_steps) out.steps_multiple_of = std::lround(horizon() / dt);
  return out;
}

}  // namespace sparsehjb
