#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "cwds/error.hpp"

namespace cwds {

using Vector = std::vector<double>;

/// Square pixel grid covering [-fov/2, fov/2]^2.
///
/// Images are flat vectors of length n*n stacked column by column: pixel
/// (row i, column j) lives at index j*n + i. Row 0 is the top of the image
/// (largest y), column 0 the left edge (smallest x).
struct ImageGrid {
  int n = 0;
  double fov = 1.0;

  ImageGrid() = default;
  ImageGrid(int side, double field_of_view) : n(side), fov(field_of_view) {
    detail::require(side > 0, ErrorCode::InvalidArgument, "grid side must be positive");
    detail::require(field_of_view > 0.0 && std::isfinite(field_of_view), ErrorCode::InvalidArgument,
                    "field of view must be positive");
  }

  std::size_t size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
  double pixel_size() const { return fov / n; }
  double half_width() const { return 0.5 * fov; }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(row);
  }
  int row_of(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(n)); }
  int col_of(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(n)); }

  double x_center(int col) const { return -half_width() + (col + 0.5) * pixel_size(); }
  double y_center(int row) const { return half_width() - (row + 0.5) * pixel_size(); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_size(b.size(), a.size(), "dot operand");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance2(std::span<const double> a, std::span<const double> b) {
  detail::require_size(b.size(), a.size(), "distance operand");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace cwds
