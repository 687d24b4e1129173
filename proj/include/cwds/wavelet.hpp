#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/image.hpp"

namespace cwds {

/// Multi-level orthonormal 2D Haar transform of an n x n image.
///
/// Each level filters the current approximation block along x (image
/// columns) and then along y (image rows) with the pair
///   low  = (a + b) / sqrt(2),  high = (a - b) / sqrt(2),
/// where a precedes b in index order. Coefficients are laid out as
///
///   [ LL_L | HL_L LH_L HH_L | HL_{L-1} LH_{L-1} HH_{L-1} | ... | HL_1 LH_1 HH_1 ]
///
/// coarse to fine, every block stored column by column like an image. HL is
/// high-pass along x and low-pass along y, LH the reverse. Level 1 is the
/// finest (blocks of side n/2); the approximation block has side n / 2^L.
/// With zero levels the transform is the identity.
class WaveletPlan {
 public:
  WaveletPlan() = default;
  WaveletPlan(int n, int levels) : n_(n), levels_(levels) {
    detail::require(n > 0, ErrorCode::InvalidArgument, "wavelet side must be positive");
    detail::require(levels >= 0 && levels < 31, ErrorCode::InvalidArgument, "wavelet levels out of range");
    detail::require(n % (1 << levels) == 0, ErrorCode::InvalidArgument,
                    "2^levels must divide the image side (n=" + std::to_string(n) +
                        ", levels=" + std::to_string(levels) + ")");
  }

  int n() const { return n_; }
  int levels() const { return levels_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }
  int coarse_side() const { return n_ >> levels_; }

  /// Offset of the approximation block in the coefficient vector (always 0).
  std::size_t approximation_offset() const { return 0; }

  /// Offset of detail block `band` (0 = HL, 1 = LH, 2 = HH) at `level` (1 = finest).
  std::size_t detail_offset(int level, int band) const {
    std::size_t off = static_cast<std::size_t>(coarse_side()) * static_cast<std::size_t>(coarse_side());
    for (int l = levels_; l > level; --l) {
      const std::size_t s = static_cast<std::size_t>(n_ >> l);
      off += 3 * s * s;
    }
    const std::size_t s = static_cast<std::size_t>(n_ >> level);
    return off + static_cast<std::size_t>(band) * s * s;
  }

 private:
  int n_ = 1;
  int levels_ = 0;
};

namespace detail {

inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// In-place Mallat pyramid on a column-major n x n buffer.
inline void haar_analysis_inplace(std::vector<double>& buf, int n, int levels) {
  std::vector<double> line(static_cast<std::size_t>(n));
  const auto at = [&](int row, int col) -> double& {
    return buf[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)];
  };
  for (int level = 1, s = n; level <= levels; ++level, s /= 2) {
    const int h = s / 2;
    for (int r = 0; r < s; ++r) {
      for (int k = 0; k < h; ++k) {
        const double a = at(r, 2 * k), b = at(r, 2 * k + 1);
        line[static_cast<std::size_t>(k)] = (a + b) * kInvSqrt2;
        line[static_cast<std::size_t>(h + k)] = (a - b) * kInvSqrt2;
      }
      for (int c = 0; c < s; ++c) at(r, c) = line[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < s; ++c) {
      for (int k = 0; k < h; ++k) {
        const double a = at(2 * k, c), b = at(2 * k + 1, c);
        line[static_cast<std::size_t>(k)] = (a + b) * kInvSqrt2;
        line[static_cast<std::size_t>(h + k)] = (a - b) * kInvSqrt2;
      }
      for (int r = 0; r < s; ++r) at(r, c) = line[static_cast<std::size_t>(r)];
    }
  }
}

inline void haar_synthesis_inplace(std::vector<double>& buf, int n, int levels) {
  std::vector<double> line(static_cast<std::size_t>(n));
  const auto at = [&](int row, int col) -> double& {
    return buf[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)];
  };
  for (int level = levels; level >= 1; --level) {
    const int s = n >> (level - 1);
    const int h = s / 2;
    for (int c = 0; c < s; ++c) {
      for (int k = 0; k < h; ++k) {
        const double lo = at(k, c), hi = at(h + k, c);
        line[static_cast<std::size_t>(2 * k)] = (lo + hi) * kInvSqrt2;
        line[static_cast<std::size_t>(2 * k + 1)] = (lo - hi) * kInvSqrt2;
      }
      for (int r = 0; r < s; ++r) at(r, c) = line[static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < s; ++r) {
      for (int k = 0; k < h; ++k) {
        const double lo = at(r, k), hi = at(r, h + k);
        line[static_cast<std::size_t>(2 * k)] = (lo + hi) * kInvSqrt2;
        line[static_cast<std::size_t>(2 * k + 1)] = (lo - hi) * kInvSqrt2;
      }
      for (int c = 0; c < s; ++c) at(r, c) = line[static_cast<std::size_t>(c)];
    }
  }
}

// Copies between the Mallat buffer and the packed subband layout.
template <bool ToPacked>
void haar_pack(const WaveletPlan& plan, std::vector<double>& mallat, std::span<double> packed) {
  const int n = plan.n();
  const auto copy_block = [&](int row0, int col0, int side, std::size_t offset) {
    for (int c = 0; c < side; ++c) {
      for (int r = 0; r < side; ++r) {
        double& m = mallat[static_cast<std::size_t>(col0 + c) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(row0 + r)];
        double& p = packed[offset + static_cast<std::size_t>(c) * static_cast<std::size_t>(side) +
                           static_cast<std::size_t>(r)];
        if constexpr (ToPacked) p = m; else m = p;
      }
    }
  };
  copy_block(0, 0, plan.coarse_side(), plan.approximation_offset());
  for (int level = plan.levels(); level >= 1; --level) {
    const int s = n >> level;
    copy_block(0, s, s, plan.detail_offset(level, 0));  // HL: high along x
    copy_block(s, 0, s, plan.detail_offset(level, 1));  // LH: high along y
    copy_block(s, s, s, plan.detail_offset(level, 2));  // HH
  }
}

}  // namespace detail

inline void forward_haar_2d(std::span<const double> image, const WaveletPlan& plan, std::span<double> coeffs) {
  detail::require_size(image.size(), plan.size(), "image");
  detail::require_size(coeffs.size(), plan.size(), "coefficient vector");
  std::vector<double> buf(image.begin(), image.end());
  detail::haar_analysis_inplace(buf, plan.n(), plan.levels());
  detail::haar_pack<true>(plan, buf, coeffs);
}

inline Vector forward_haar_2d(std::span<const double> image, const WaveletPlan& plan) {
  Vector out(plan.size());
  forward_haar_2d(image, plan, out);
  return out;
}

/// Synthesis W^T c; the exact inverse of forward_haar_2d.
inline void inverse_haar_2d(std::span<const double> coeffs, const WaveletPlan& plan, std::span<double> image) {
  detail::require_size(coeffs.size(), plan.size(), "coefficient vector");
  detail::require_size(image.size(), plan.size(), "image");
  std::vector<double> buf(plan.size());
  std::vector<double> packed(coeffs.begin(), coeffs.end());
  detail::haar_pack<false>(plan, buf, packed);
  detail::haar_synthesis_inplace(buf, plan.n(), plan.levels());
  std::copy(buf.begin(), buf.end(), image.begin());
}

inline Vector inverse_haar_2d(std::span<const double> coeffs, const WaveletPlan& plan) {
  Vector out(plan.size());
  inverse_haar_2d(coeffs, plan, out);
  return out;
}

/// Number of entries with |w_i| > kappa (strict).
inline std::size_t count_above_threshold(std::span<const double> w, double kappa) {
  detail::require(kappa >= 0.0, ErrorCode::InvalidArgument, "kappa must be non-negative");
  std::size_t count = 0;
  for (double x : w)
    if (std::abs(x) > kappa) ++count;
  return count;
}

/// Fraction of Haar coefficients of `image` exceeding kappa in magnitude.
inline double sparsity_ratio(std::span<const double> image, const WaveletPlan& plan, double kappa) {
  const auto coeffs = forward_haar_2d(image, plan);
  return static_cast<double>(count_above_threshold(coeffs, kappa)) / static_cast<double>(plan.size());
}

}  // namespace cwds
