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

#include "sparsehjb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sparsehjb {

SpatialGrid::SpatialGrid(const Vector& lower, const Vector& upper, const std::vector<int>& points,
                         std::size_t max_points) {
  const auto dim = lower.size();
  if (dim < 1 || dim > 2) throw ConfigError("grid dimension must be 1 or 2");
  if (upper.size() != dim || static_cast<Eigen::Index>(points.size()) != dim) {
    throw ConfigError("grid bounds and point counts must have the same length");
  }
  dim_ = static_cast<int>(dim);
  size_ = 1;
  for (int d = 0; d < dim_; ++d) {
    if (!(lower(d) < upper(d)) || !std::isfinite(lower(d)) || !std::isfinite(upper(d))) {
      throw ConfigError("grid needs lower < upper in dimension " + std::to_string(d));
    }
    if (points[d] < kMinPointsPerDim) {
      throw ConfigError("grid needs at least " + std::to_string(kMinPointsPerDim) +
                        " points per dimension");
    }
    lower_[d] = lower(d);
    upper_[d] = upper(d);
    points_[d] = points[d];
    spacing_[d] = (upper(d) - lower(d)) / (points[d] - 1);
    size_ *= static_cast<std::size_t>(points[d]);
  }
  if (size_ > max_points) {
    throw ConfigError("grid has " + std::to_string(size_) + " nodes, cap is " +
                      std::to_string(max_points));
  }
}

double SpatialGrid::min_spacing() const {
  return dim_ == 1 ? spacing_[0] : std::min(spacing_[0], spacing_[1]);
}

Vector SpatialGrid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vector x(dim_);
  for (int d = 0; d < dim_; ++d) x(d) = coordinate(d, idx[d]);
  return x;
}

int SpatialGrid::nearest_index(int d, double value) const {
  const long i = std::lround((value - lower_[d]) / spacing_[d]);
  return static_cast<int>(std::clamp<long>(i, 0, points_[d] - 1));
}

bool SpatialGrid::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) return false;
  for (int d = 0; d < dim_; ++d) {
    if (!(x(d) >= lower_[d] - tol && x(d) <= upper_[d] + tol)) return false;
  }
  return true;
}

void SpatialGrid::require_contains(const Vector& x) const {
  if (x.size() != dim_) {
    throw DomainError("point has dimension " + std::to_string(x.size()) + ", grid has " +
                      std::to_string(dim_));
  }
  if (!contains(x)) throw DomainError("point outside grid bounds");
}

SpatialGrid::Cell SpatialGrid::locate(const Vector& x) const {
  Cell cell;
  for (int d = 0; d < dim_; ++d) {
    const double s = (x(d) - lower_[d]) / spacing_[d];
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, points_[d] - 2);
    cell.corner[d] = i;
    cell.weight[d] = std::clamp(s - i, 0.0, 1.0);
  }
  return cell;
}

bool SpatialGrid::operator==(const SpatialGrid& other) const {
  return dim_ == other.dim_ && lower_ == other.lower_ && upper_ == other.upper_ &&
         points_ == other.points_;
}

}  // namespace sparsehjb
