#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/geometry.hpp"
#include "cwds/image.hpp"
#include "cwds/random.hpp"

namespace cwds {

/// Anything that maps images to sinograms with a matched adjoint.
template <typename Op>
concept LinearOperator = requires(const Op& op, std::span<const double> in, std::span<double> out) {
  { op.rows() } -> std::convertible_to<std::size_t>;
  { op.cols() } -> std::convertible_to<std::size_t>;
  op.apply(in, out);
  op.apply_adjoint(in, out);
};

/// Ray/pixel intersection-length matrix in compressed sparse row layout.
class SparseSystemMatrix {
 public:
  SparseSystemMatrix() = default;

  SparseSystemMatrix(std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<std::int32_t> indices,
                     std::vector<double> values)
      : cols_(cols), row_ptr_(std::move(row_ptr)), indices_(std::move(indices)), values_(std::move(values)) {
    detail::require(!row_ptr_.empty() && row_ptr_.front() == 0 && row_ptr_.back() == values_.size() &&
                        indices_.size() == values_.size(),
                    ErrorCode::InvalidArgument, "inconsistent CSR arrays");
    for (auto idx : indices_)
      detail::require(idx >= 0 && static_cast<std::size_t>(idx) < cols_, ErrorCode::InvalidArgument,
                      "column index out of range");
  }

  static SparseSystemMatrix from_rows(std::size_t cols, const std::vector<std::vector<RowEntry>>& rows) {
    std::vector<std::size_t> ptr{0};
    std::vector<std::int32_t> idx;
    std::vector<double> val;
    for (const auto& r : rows) {
      for (const auto& e : r) {
        idx.push_back(e.pixel);
        val.push_back(e.length);
      }
      ptr.push_back(val.size());
    }
    return {cols, std::move(ptr), std::move(idx), std::move(val)};
  }

  /// Row-major dense input; exact zeros are not stored.
  static SparseSystemMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> dense) {
    detail::require_size(dense.size(), rows * cols, "dense matrix");
    std::vector<std::size_t> ptr{0};
    std::vector<std::int32_t> idx;
    std::vector<double> val;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = dense[r * cols + c];
        if (v == 0.0) continue;
        idx.push_back(static_cast<std::int32_t>(c));
        val.push_back(v);
      }
      ptr.push_back(val.size());
    }
    return {cols, std::move(ptr), std::move(idx), std::move(val)};
  }

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> indices() const { return indices_; }
  std::span<const double> values() const { return values_; }

  void apply(std::span<const double> f, std::span<double> out) const {
    detail::require_size(f.size(), cols_, "image");
    detail::require_size(out.size(), rows(), "sinogram");
    for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * f[static_cast<std::size_t>(indices_[k])];
      out[r] = acc;
    }
  }

  void apply_adjoint(std::span<const double> y, std::span<double> out) const {
    detail::require_size(y.size(), rows(), "sinogram");
    detail::require_size(out.size(), cols_, "image");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
      const double yr = y[r];
      if (yr == 0.0) continue;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[static_cast<std::size_t>(indices_[k])] += values_[k] * yr;
    }
  }

  /// Copy with every value multiplied by `factor`.
  SparseSystemMatrix scaled(double factor) const {
    SparseSystemMatrix out = *this;
    for (auto& v : out.values_) v *= factor;
    out.norm_estimate = norm_estimate ? std::optional<double>(*norm_estimate * std::abs(factor)) : std::nullopt;
    return out;
  }

  std::optional<double> norm_estimate;
  bool normalized = false;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::int32_t> indices_;
  std::vector<double> values_;
};

/// Traces rays on every application instead of storing A.
class MatrixFreeProjector {
 public:
  MatrixFreeProjector(const FanBeamGeometry& geom, const ImageGrid& grid) : grid_(grid), rays_(build_rays(geom)) {
    geom.validate(grid);
  }

  std::size_t rows() const { return rays_.size(); }
  std::size_t cols() const { return grid_.size(); }
  double scale() const { return scale_; }

  void apply(std::span<const double> f, std::span<double> out) const {
    detail::require_size(f.size(), cols(), "image");
    detail::require_size(out.size(), rows(), "sinogram");
    std::vector<RowEntry> row;
    for (std::size_t r = 0; r < rays_.size(); ++r) {
      row.clear();
      trace_ray(rays_[r], grid_, row);
      double acc = 0.0;
      for (const auto& e : row) acc += (e.length * scale_) * f[static_cast<std::size_t>(e.pixel)];
      out[r] = acc;
    }
  }

  void apply_adjoint(std::span<const double> y, std::span<double> out) const {
    detail::require_size(y.size(), rows(), "sinogram");
    detail::require_size(out.size(), cols(), "image");
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<RowEntry> row;
    for (std::size_t r = 0; r < rays_.size(); ++r) {
      if (y[r] == 0.0) continue;
      row.clear();
      trace_ray(rays_[r], grid_, row);
      for (const auto& e : row) out[static_cast<std::size_t>(e.pixel)] += (e.length * scale_) * y[r];
    }
  }

  MatrixFreeProjector scaled(double factor) const {
    MatrixFreeProjector out = *this;
    out.scale_ *= factor;
    out.norm_estimate = norm_estimate ? std::optional<double>(*norm_estimate * std::abs(factor)) : std::nullopt;
    return out;
  }

  std::optional<double> norm_estimate;

 private:
  ImageGrid grid_;
  std::vector<Ray> rays_;
  double scale_ = 1.0;
};

struct AssemblyOptions {
  /// Refuse assembly above this many predicted nonzeros (12 bytes each).
  std::size_t max_nonzeros = 100'000'000;
};

/// Upper bound on stored entries: a line crosses at most 2n - 1 pixels of an n x n grid.
inline std::size_t predicted_nonzeros(const FanBeamGeometry& geom, const ImageGrid& grid) {
  return geom.num_rays() * static_cast<std::size_t>(2 * grid.n - 1);
}

inline SparseSystemMatrix assemble_system_matrix(const FanBeamGeometry& geom, const ImageGrid& grid,
                                                 const AssemblyOptions& options = {}) {
  geom.validate(grid);
  const auto predicted = predicted_nonzeros(geom, grid);
  if (predicted > options.max_nonzeros) {
    throw Error(ErrorCode::ScaleGuard, "predicted " + std::to_string(predicted) + " nonzeros exceeds cap of " +
                                           std::to_string(options.max_nonzeros) +
                                           "; use MatrixFreeProjector instead");
  }
  const auto rays = build_rays(geom);
  std::vector<std::size_t> ptr{0};
  ptr.reserve(rays.size() + 1);
  std::vector<std::int32_t> idx;
  std::vector<double> val;
  std::vector<RowEntry> row;
  for (const auto& ray : rays) {
    row.clear();
    trace_ray(ray, grid, row);
    for (const auto& e : row) {
      idx.push_back(e.pixel);
      val.push_back(e.length);
    }
    ptr.push_back(val.size());
  }
  return {grid.size(), std::move(ptr), std::move(idx), std::move(val)};
}

template <LinearOperator Op>
Vector forward_project(const Op& A, std::span<const double> f) {
  Vector out(A.rows());
  A.apply(f, out);
  return out;
}

template <LinearOperator Op>
Vector back_project(const Op& A, std::span<const double> m) {
  Vector out(A.cols());
  A.apply_adjoint(m, out);
  return out;
}

struct PowerIterationOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
  std::uint64_t seed = 0x5EED;
};

/// Largest singular value of A by power iteration on A^T A.
///
/// The estimate ||A x|| for unit x is the square root of the Rayleigh
/// quotient; iteration stops once successive estimates agree to `tolerance`
/// (relative) or after `max_iterations`.
template <LinearOperator Op>
double spectral_norm(const Op& A, const PowerIterationOptions& options = {}) {
  const std::size_t n = A.cols();
  detail::require(n > 0 && A.rows() > 0, ErrorCode::InvalidArgument, "empty operator");
  SplitMix64 rng(options.seed);
  Vector x(n), y(A.rows());
  for (auto& v : x) v = 0.5 + rng.uniform();
  double nx = norm2(x);
  for (auto& v : x) v /= nx;

  double estimate = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    A.apply(x, y);
    const double next = norm2(y);
    detail::require(next > 0.0 && std::isfinite(next), ErrorCode::InvalidArgument,
                    "spectral norm of a zero operator is undefined");
    const bool converged = it > 0 && std::abs(next - estimate) < options.tolerance * next;
    estimate = next;
    if (converged) break;
    A.apply_adjoint(y, x);
    nx = norm2(x);
    detail::require(nx > 0.0, ErrorCode::InvalidArgument, "spectral norm of a zero operator is undefined");
    for (auto& v : x) v /= nx;
  }
  return estimate;
}

template <LinearOperator Op>
struct NormalizedSystem {
  Op op;
  Vector data;
  double norm = 0.0;
};

/// Divides A and m jointly by ||A||_2; the minimiser of the least-squares
/// plus l1 functional is unchanged when mu is divided by ||A||^2.
template <LinearOperator Op>
NormalizedSystem<Op> normalize_system(const Op& A, std::span<const double> m) {
  detail::require_size(m.size(), A.rows(), "sinogram");
  const double norm = A.norm_estimate ? *A.norm_estimate : spectral_norm(A);
  detail::require(norm > 0.0 && std::isfinite(norm), ErrorCode::InvalidArgument, "operator norm must be positive");
  NormalizedSystem<Op> out{A.scaled(1.0 / norm), Vector(m.begin(), m.end()), norm};
  for (auto& v : out.data) v /= norm;
  out.op.norm_estimate = 1.0;
  if constexpr (requires { out.op.normalized; }) out.op.normalized = true;
  return out;
}

}  // namespace cwds
