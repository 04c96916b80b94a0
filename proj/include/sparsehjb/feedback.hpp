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

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "sparsehjb/core_model.hpp"
#include "sparsehjb/hjb_solver.hpp"
#include "sparsehjb/sde_lab.hpp"

namespace sparsehjb {

/// State feedback (s, x) -> u read off a solved value field. Ties at |b U| = 1
/// resolve to zero, the sparser of the two maximizers.
class FeedbackMap {
 public:
  FeedbackMap(std::shared_ptr<const ValueField> field, ProblemSpec spec);

  const ValueField& field() const { return *field_; }
  const ProblemSpec& spec() const { return spec_; }
  std::shared_ptr<const ValueField> field_ptr() const { return field_; }

 private:
  std::shared_ptr<const ValueField> field_;
  ProblemSpec spec_;
};

/// b_j(s, x) = D_x V(s, x) . f_j(x).
double switching_value(const FeedbackMap& map, double s, const Vector& x, int channel);

/// Per-channel selection: lo if b lo < -1, hi if b hi < -1, otherwise 0.
double bang_off_bang(double b, double lo, double hi);

Vector feedback(const FeedbackMap& map, double s, const Vector& x);

/// Closed-form sparse law for dx = (c x + u) dt, g = x^2, |u| <= 1.
double deterministic_scalar_law(double s, double x, double c, double horizon);

/// Threshold 0.5 exp(-2 c (T - s)) of the law above.
double deterministic_scalar_threshold(double s, double c, double horizon);

struct BoundaryBranch {
  char sign = '-';  ///< '-' for the level set b U^- = -1, '+' for b U^+ = -1
  std::vector<double> points;                          ///< 1D roots
  std::vector<std::pair<Vector, Vector>> segments;     ///< 2D segments
};

struct SwitchingBoundary {
  double time = 0.0;  ///< stored slice time actually used
  int channel = 0;
  std::vector<BoundaryBranch> branches;

  bool empty() const;
};

/// 1D: interpolated sign changes of b U^{+-} + 1 between neighbouring nodes.
/// 2D: marching squares on the same nodal quantity.
SwitchingBoundary extract_boundary(const FeedbackMap& map, double s, int channel);

/// min over path samples and channels of | |b_j U_active| - 1 |.
double normality_margin(const FeedbackMap& map, const SdePath& path);

Controller feedback_controller(const FeedbackMap& map);
Controller deterministic_law_controller(double c, double horizon);

/// Columns s, channel, branch, [segment,] x1[, x2]. When analytic_c is given
/// (scalar problem) an extra column carries the closed-form threshold.
void write_boundary_csv(std::ostream& out, const std::vector<SwitchingBoundary>& boundaries,
                        int state_dim, std::optional<std::pair<double, double>> analytic_c_T);

}  // namespace sparsehjb
