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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sparsehjb/hjb_solver.hpp"

namespace sparsehjb {

ValueField::ValueField(SpatialGrid grid, std::vector<double> times, std::vector<Vector> slices)
    : grid_(std::move(grid)), times_(std::move(times)), slices_(std::move(slices)) {
  if (times_.empty() || times_.size() != slices_.size()) {
    throw ConfigError("value field needs one slice per time stamp");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw ConfigError("value field times must increase");
  }
  for (const auto& s : slices_) {
    if (static_cast<std::size_t>(s.size()) != grid_.size()) {
      throw ConfigError("value field slice does not match the grid size");
    }
  }
}

std::size_t ValueField::nearest_slice(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(horizon()));
  if (!(t >= times_.front() - tol && t <= times_.back() + tol)) {
    throw DomainError("time " + std::to_string(t) + " outside the field's time window");
  }
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  if (it == times_.end()) return times_.size() - 1;
  const auto k = static_cast<std::size_t>(it - times_.begin());
  return (times_[k] - t) < (t - times_[k - 1]) ? k : k - 1;
}

namespace {

template <typename NodalFn>
auto interpolate(const SpatialGrid& grid, const Vector& x, NodalFn&& nodal) {
  const auto cell = grid.locate(x);
  if (grid.dim() == 1) {
    const double w = cell.weight[0];
    auto lo = nodal(grid.flat_index(cell.corner[0]));
    auto hi = nodal(grid.flat_index(cell.corner[0] + 1));
    return decltype(lo)((1.0 - w) * lo + w * hi);
  }
  const double w0 = cell.weight[0];
  const double w1 = cell.weight[1];
  const int i = cell.corner[0];
  const int j = cell.corner[1];
  auto v00 = nodal(grid.flat_index(i, j));
  auto v01 = nodal(grid.flat_index(i, j + 1));
  auto v10 = nodal(grid.flat_index(i + 1, j));
  auto v11 = nodal(grid.flat_index(i + 1, j + 1));
  return decltype(v00)((1.0 - w0) * ((1.0 - w1) * v00 + w1 * v01) +
                       w0 * ((1.0 - w1) * v10 + w1 * v11));
}

}  // namespace

double ValueField::value_at(double t, const Vector& x) const {
  grid_.require_contains(x);
  const Vector& v = slices_[nearest_slice(t)];
  return interpolate(grid_, x, [&](std::size_t flat) { return v(flat); });
}

Vector ValueField::nodal_gradient(std::size_t k, std::size_t flat) const {
  const Vector& v = slices_[k];
  const auto idx = grid_.multi_index(flat);
  Vector grad(grid_.dim());
  for (int d = 0; d < grid_.dim(); ++d) {
    const int n = grid_.points(d);
    const double h = grid_.spacing(d);
    auto at = [&](int shift) {
      auto j = idx;
      j[d] += shift;
      return v(grid_.flat_index(j[0], j[1]));
    };
    if (idx[d] == 0) {
      grad(d) = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    } else if (idx[d] == n - 1) {
      grad(d) = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
    } else {
      grad(d) = (at(1) - at(-1)) / (2.0 * h);
    }
  }
  return grad;
}

Matrix ValueField::nodal_hessian(std::size_t k, std::size_t flat) const {
  const Vector& v = slices_[k];
  auto idx = grid_.multi_index(flat);
  for (int d = 0; d < grid_.dim(); ++d) idx[d] = std::clamp(idx[d], 1, grid_.points(d) - 2);
  auto at = [&](int s0, int s1) {
    return v(grid_.flat_index(idx[0] + s0, grid_.dim() == 2 ? idx[1] + s1 : 0));
  };
  const int n = grid_.dim();
  Matrix hess(n, n);
  const double h0 = grid_.spacing(0);
  hess(0, 0) = (at(1, 0) - 2.0 * at(0, 0) + at(-1, 0)) / (h0 * h0);
  if (n == 2) {
    const double h1 = grid_.spacing(1);
    hess(1, 1) = (at(0, 1) - 2.0 * at(0, 0) + at(0, -1)) / (h1 * h1);
    hess(0, 1) = hess(1, 0) =
        (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h0 * h1);
  }
  return hess;
}

bool ValueField::operator==(const ValueField& other) const {
  if (!(grid_ == other.grid_) || times_ != other.times_ ||
      slices_.size() != other.slices_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < slices_.size(); ++k) {
    if (slices_[k] != other.slices_[k]) return false;
  }
  return true;
}

Vector gradient_at(const ValueField& field, double t, const Vector& x) {
  field.grid().require_contains(x);
  const std::size_t k = field.nearest_slice(t);
  return interpolate(field.grid(), x,
                     [&](std::size_t flat) { return field.nodal_gradient(k, flat); });
}

Matrix hessian_at(const ValueField& field, double t, const Vector& x) {
  field.grid().require_contains(x);
  const std::size_t k = field.nearest_slice(t);
  return interpolate(field.grid(), x,
                     [&](std::size_t flat) { return field.nodal_hessian(k, flat); });
}

double hjb_residual(const ValueField& field, const ProblemSpec& spec, double t, const Vector& x) {
  const auto& grid = field.grid();
  grid.require_contains(x);
  if (x.size() != spec.system.state_dim) throw ConfigError("state dimension mismatch");
  const std::size_t k = field.nearest_slice(t);
  if (k == 0 || k + 1 >= field.num_slices()) {
    throw DomainError("residual needs a slice strictly inside the time window");
  }
  for (int d = 0; d < grid.dim(); ++d) {
    const double margin = 2.0 * grid.spacing(d);
    if (x(d) < grid.lower(d) + margin || x(d) > grid.upper(d) - margin) {
      throw DomainError("residual needs x at least two nodes from the boundary");
    }
  }
  const auto& times = field.times();
  const double span = times[k + 1] - times[k - 1];
  const Vector& later = field.slice(k + 1);
  const Vector& earlier = field.slice(k - 1);
  const double v_t =
      interpolate(grid, x, [&](std::size_t flat) { return (later(flat) - earlier(flat)) / span; });
  const Vector p =
      interpolate(grid, x, [&](std::size_t flat) { return field.nodal_gradient(k, flat); });
  const Matrix m =
      interpolate(grid, x, [&](std::size_t flat) { return field.nodal_hessian(k, flat); });
  return -v_t + hamiltonian(spec, HamiltonianArgs(x, p, m));
}

namespace {

void append_number(std::string& line, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  line.append(buf, res.ptr);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == ',' || *p == '\t' || *p == '\r')) ++p;
    if (p >= end) break;
    double value = 0.0;
    const auto res = std::from_chars(p, end, value);
    if (res.ec != std::errc()) throw ConfigError("malformed number in " + context);
    out.push_back(value);
    p = res.ptr;
  }
  return out;
}

}  // namespace

void write_value_field(std::ostream& out, const ValueField& field) {
  const auto& grid = field.grid();
  std::string line = "# grid " + std::to_string(grid.dim());
  for (int d = 0; d < grid.dim(); ++d) {
    line += ' ';
    append_number(line, grid.lower(d));
  }
  for (int d = 0; d < grid.dim(); ++d) {
    line += ' ';
    append_number(line, grid.upper(d));
  }
  for (int d = 0; d < grid.dim(); ++d) line += ' ' + std::to_string(grid.points(d));
  out << line << '\n';
  line = "# times";
  for (double t : field.times()) {
    line += ' ';
    append_number(line, t);
  }
  out << line << '\n';
  for (std::size_t k = 0; k < field.num_slices(); ++k) {
    line.clear();
    const Vector& v = field.slice(k);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) line += ',';
      append_number(line, v(i));
    }
    out << line << '\n';
  }
}

ValueField read_value_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# grid ", 0) != 0) {
    throw ConfigError("value field file: missing '# grid' header");
  }
  const auto header = parse_numbers(line.substr(7), "grid header");
  if (header.empty()) throw ConfigError("value field file: empty grid header");
  const int dim = static_cast<int>(header[0]);
  if ((dim != 1 && dim != 2) || header.size() != static_cast<std::size_t>(1 + 3 * dim)) {
    throw ConfigError("value field file: malformed grid header");
  }
  Vector lower(dim), upper(dim);
  std::vector<int> points(dim);
  for (int d = 0; d < dim; ++d) {
    lower(d) = header[1 + d];
    upper(d) = header[1 + dim + d];
    points[d] = static_cast<int>(header[1 + 2 * dim + d]);
  }
  SpatialGrid grid(lower, upper, points);
  if (!std::getline(in, line) || line.rfind("# times", 0) != 0) {
    throw ConfigError("value field file: missing '# times' header");
  }
  auto times = parse_numbers(line.substr(7), "times header");
  std::vector<Vector> slices;
  slices.reserve(times.size());
  while (slices.size() < times.size() && std::getline(in, line)) {
    if (line.empty()) continue;
    const auto values = parse_numbers(line, "slice " + std::to_string(slices.size()));
    if (values.size() != grid.size()) {
      throw ConfigError("value field file: slice " + std::to_string(slices.size()) + " has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(grid.size()));
    }
    slices.emplace_back(Eigen::Map<const Vector>(values.data(), values.size()));
  }
  if (slices.size() != times.size()) throw ConfigError("value field file: truncated");
  return ValueField(std::move(grid), std::move(times), std::move(slices));
}

}  // namespace sparsehjb
