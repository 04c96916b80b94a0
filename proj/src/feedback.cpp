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

#include "sparsehjb/feedback.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace sparsehjb {

FeedbackMap::FeedbackMap(std::shared_ptr<const ValueField> field, ProblemSpec spec)
    : field_(std::move(field)), spec_(std::move(spec)) {
  if (!field_) throw ConfigError("feedback map needs a value field");
  spec_.validate();
  if (field_->grid().dim() != spec_.system.state_dim) {
    throw ConfigError("value field grid dimension does not match the system");
  }
}

double switching_value(const FeedbackMap& map, double s, const Vector& x, int channel) {
  const auto& spec = map.spec();
  if (channel < 0 || channel >= spec.system.control_dim) throw ConfigError("no such channel");
  const Vector p = gradient_at(map.field(), s, x);
  return p.dot(spec.system.control_fields[channel](x));
}

double bang_off_bang(double b, double lo, double hi) {
  if (b * lo < -1.0) return lo;
  if (b * hi < -1.0) return hi;
  return 0.0;
}

Vector feedback(const FeedbackMap& map, double s, const Vector& x) {
  const auto& spec = map.spec();
  const Vector p = gradient_at(map.field(), s, x);
  Vector u(spec.system.control_dim);
  for (int j = 0; j < spec.system.control_dim; ++j) {
    const double b = p.dot(spec.system.control_fields[j](x));
    u(j) = bang_off_bang(b, spec.controls.lower(j), spec.controls.upper(j));
  }
  return u;
}

double deterministic_scalar_threshold(double s, double c, double horizon) {
  return 0.5 * std::exp(-2.0 * c * (horizon - s));
}

double deterministic_scalar_law(double s, double x, double c, double horizon) {
  const double threshold = deterministic_scalar_threshold(s, c, horizon);
  if (x > threshold) return -1.0;
  if (x < -threshold) return 1.0;
  return 0.0;
}

bool SwitchingBoundary::empty() const {
  for (const auto& b : branches) {
    if (!b.points.empty() || !b.segments.empty()) return false;
  }
  return true;
}

namespace {

// Nodal b_j on the slice nearest to s.
Vector nodal_switching(const FeedbackMap& map, std::size_t k, int channel) {
  const auto& grid = map.field().grid();
  const auto& field = map.spec().system.control_fields[channel];
  Vector b(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    b(static_cast<Eigen::Index>(i)) = map.field().nodal_gradient(k, i).dot(field(grid.node(i)));
  }
  return b;
}

std::vector<double> roots_1d(const SpatialGrid& grid, const Vector& q) {
  std::vector<double> roots;
  for (int i = 0; i + 1 < grid.points(0); ++i) {
    const double a = q(i), b = q(i + 1);
    if ((a < 0.0) != (b < 0.0)) {
      roots.push_back(grid.coordinate(0, i) + grid.spacing(0) * a / (a - b));
    }
  }
  return roots;
}

std::vector<std::pair<Vector, Vector>> marching_squares(const SpatialGrid& grid, const Vector& q) {
  std::vector<std::pair<Vector, Vector>> segments;
  const int n0 = grid.points(0), n1 = grid.points(1);
  for (int i = 0; i + 1 < n0; ++i) {
    for (int j = 0; j + 1 < n1; ++j) {
      // Corners counter-clockwise from (i, j); edge e connects corner e and e + 1.
      const int ci[4] = {i, i + 1, i + 1, i};
      const int cj[4] = {j, j, j + 1, j + 1};
      double val[4];
      bool inside[4];
      int count = 0;
      for (int c = 0; c < 4; ++c) {
        val[c] = q(static_cast<Eigen::Index>(grid.flat_index(ci[c], cj[c])));
        inside[c] = val[c] < 0.0;
        count += inside[c] ? 1 : 0;
      }
      if (count == 0 || count == 4) continue;
      Vector cross[4];
      bool cut[4];
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        cut[e] = inside[a] != inside[b];
        if (!cut[e]) continue;
        const double w = val[a] / (val[a] - val[b]);
        cross[e] = Vector(2);
        cross[e](0) = grid.coordinate(0, ci[a]) + w * (grid.coordinate(0, ci[b]) - grid.coordinate(0, ci[a]));
        cross[e](1) = grid.coordinate(1, cj[a]) + w * (grid.coordinate(1, cj[b]) - grid.coordinate(1, cj[a]));
      }
      const int cuts = cut[0] + cut[1] + cut[2] + cut[3];
      if (cuts == 2) {
        int first = -1, second = -1;
        for (int e = 0; e < 4; ++e) {
          if (!cut[e]) continue;
          (first < 0 ? first : second) = e;
        }
        segments.emplace_back(cross[first], cross[second]);
      } else {
        // Saddle: cut off the corners that disagree with the cell centre.
        const bool centre = 0.25 * (val[0] + val[1] + val[2] + val[3]) < 0.0;
        for (int c = 0; c < 4; ++c) {
          if (inside[c] == centre) continue;
          segments.emplace_back(cross[(c + 3) % 4], cross[c]);
        }
      }
    }
  }
  return segments;
}

}  // namespace

SwitchingBoundary extract_boundary(const FeedbackMap& map, double s, int channel) {
  const auto& spec = map.spec();
  if (channel < 0 || channel >= spec.system.control_dim) throw ConfigError("no such channel");
  const auto& grid = map.field().grid();
  const std::size_t k = map.field().nearest_slice(s);
  const Vector b = nodal_switching(map, k, channel);

  SwitchingBoundary out;
  out.time = map.field().times()[k];
  out.channel = channel;
  for (char sign : {'-', '+'}) {
    const double bound = sign == '-' ? spec.controls.lower(channel) : spec.controls.upper(channel);
    const Vector q = (b * bound).array() + 1.0;
    BoundaryBranch branch;
    branch.sign = sign;
    if (grid.dim() == 1) {
      branch.points = roots_1d(grid, q);
    } else {
      branch.segments = marching_squares(grid, q);
    }
    out.branches.push_back(std::move(branch));
  }
  return out;
}

double normality_margin(const FeedbackMap& map, const SdePath& path) {
  const auto& spec = map.spec();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const Vector p = gradient_at(map.field(), path.times[k], path.states[k]);
    for (int j = 0; j < spec.system.control_dim; ++j) {
      const double b = p.dot(spec.system.control_fields[j](path.states[k]));
      const double active = b >= 0.0 ? spec.controls.lower(j) : spec.controls.upper(j);
      margin = std::min(margin, std::abs(std::abs(b * active) - 1.0));
    }
  }
  return margin;
}

Controller feedback_controller(const FeedbackMap& map) {
  Controller ctl;
  ctl.name = std::string(to_string(map.spec().penalty));
  ctl.law = [map](double t, const Vector& x) { return feedback(map, t, x); };
  ctl.domain = map.field().grid();
  return ctl;
}

Controller deterministic_law_controller(double c, double horizon) {
  Controller ctl;
  ctl.name = "det-law";
  ctl.law = [c, horizon](double t, const Vector& x) {
    Vector u(1);
    u(0) = deterministic_scalar_law(t, x(0), c, horizon);
    return u;
  };
  return ctl;
}

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_boundary_csv(std::ostream& out, const std::vector<SwitchingBoundary>& boundaries,
                        int state_dim, std::optional<std::pair<double, double>> analytic_c_T) {
  if (state_dim == 1) {
    out << "s,channel,branch,x1" << (analytic_c_T ? ",analytic" : "") << '\n';
  } else {
    out << "s,channel,branch,segment,x1,x2\n";
  }
  for (const auto& boundary : boundaries) {
    for (const auto& branch : boundary.branches) {
      const std::string prefix =
          num(boundary.time) + ',' + std::to_string(boundary.channel) + ',' + branch.sign;
      for (double x : branch.points) {
        out << prefix << ',' << num(x);
        if (analytic_c_T) {
          const double th = deterministic_scalar_threshold(boundary.time, analytic_c_T->first,
                                                           analytic_c_T->second);
          out << ',' << num(branch.sign == '-' ? th : -th);
        }
        out << '\n';
      }
      for (std::size_t s = 0; s < branch.segments.size(); ++s) {
        const auto& [a, b] = branch.segments[s];
        out << prefix << ',' << s << ',' << num(a(0)) << ',' << num(a(1)) << '\n';
        out << prefix << ',' << s << ',' << num(b(0)) << ',' << num(b(1)) << '\n';
      }
    }
  }
}

}  // namespace sparsehjb
