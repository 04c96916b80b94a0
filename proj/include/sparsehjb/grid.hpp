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

#include <array>
#include <cstddef>

#include "sparsehjb/core_model.hpp"

namespace sparsehjb {

/// Tensor grid on a box in one or two dimensions. Nodes are stored row-major:
/// the first coordinate varies slowest.
class SpatialGrid {
 public:
  static constexpr std::size_t kDefaultMaxPoints = 4'000'000;
  static constexpr int kMinPointsPerDim = 8;

  SpatialGrid() = default;
  SpatialGrid(const Vector& lower, const Vector& upper, const std::vector<int>& points,
              std::size_t max_points = kDefaultMaxPoints);

  int dim() const { return dim_; }
  double lower(int d) const { return lower_[d]; }
  double upper(int d) const { return upper_[d]; }
  int points(int d) const { return points_[d]; }
  double spacing(int d) const { return spacing_[d]; }
  /// Smallest spacing over dimensions.
  double min_spacing() const;
  std::size_t size() const { return size_; }

  double coordinate(int d, int i) const { return lower_[d] + spacing_[d] * i; }
  std::size_t flat_index(int i0, int i1 = 0) const {
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(points_[1]) +
           static_cast<std::size_t>(i1);
  }
  std::array<int, 2> multi_index(std::size_t flat) const {
    return {static_cast<int>(flat / points_[1]), static_cast<int>(flat % points_[1])};
  }
  Vector node(std::size_t flat) const;
  /// Index of the node nearest to coordinate value along dimension d.
  int nearest_index(int d, double value) const;

  bool contains(const Vector& x, double tol = 1e-12) const;
  /// Throws DomainError when x is outside the box.
  void require_contains(const Vector& x) const;

  /// Lower cell corner and fractional offsets in [0,1] for multilinear interpolation.
  struct Cell {
    std::array<int, 2> corner{0, 0};
    std::array<double, 2> weight{0.0, 0.0};
  };
  Cell locate(const Vector& x) const;

  bool operator==(const SpatialGrid& other) const;

 private:
  int dim_ = 0;
  std::array<double, 2> lower_{0.0, 0.0};
  std::array<double, 2> upper_{0.0, 0.0};
  std::array<int, 2> points_{1, 1};
  std::array<double, 2> spacing_{1.0, 1.0};
  std::size_t size_ = 0;
};

}  // namespace sparsehjb
