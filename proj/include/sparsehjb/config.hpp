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
#include <map>
#include <string>
#include <vector>

#include "sparsehjb/experiments.hpp"
#include "sparsehjb/hjb_solver.hpp"

namespace sparsehjb {

/// Flat "[section]" / "key = value" text. Comments start with '#', or ';' at line start.
struct RawConfig {
  struct Entry {
    std::string value;
    int line = 0;  ///< 0 for command-line overrides
  };
  std::map<std::string, Entry> entries;  ///< keyed "section.key"
};

RawConfig parse_config_text(const std::string& text);
RawConfig load_config_file(const std::string& path);
/// Applies "section.key=value"; the key must be a known one.
void apply_override(RawConfig& raw, const std::string& assignment);

enum class ProblemKind { kScalarLinear, kLfc, kCustom };

struct ExperimentConfig {
  ProblemKind kind = ProblemKind::kScalarLinear;
  Penalty penalty = Penalty::kL0;
  ScalarLinearParams scalar;
  LfcParams lfc;
  CustomCoefficients custom;
  Vector x0;

  Vector grid_lower;
  Vector grid_upper;
  std::vector<int> grid_points;
  SolverConfig solver;

  double dt = 1e-3;
  std::int64_t n_paths = 10'000;
  int display_paths = 5;
  std::uint64_t seed = 1;

  std::vector<double> boundary_times;
  std::string output_dir = "out";

  double horizon() const;
  ProblemSpec make_spec() const { return make_spec(penalty); }
  ProblemSpec make_spec(Penalty penalty_override) const;
  SpatialGrid make_grid() const;
  /// Solver settings with automatic step counts aligned to the simulation dt.
  SolverConfig aligned_solver() const;
};

/// Interprets a raw configuration; every key must be known and well formed.
ExperimentConfig interpret_config(const RawConfig& raw);

std::string_view to_string(ProblemKind kind);

}  // namespace sparsehjb
