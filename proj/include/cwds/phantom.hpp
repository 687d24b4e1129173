#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/geometry.hpp"
#include "cwds/image.hpp"
#include "cwds/random.hpp"
#include "cwds/system_matrix.hpp"

namespace cwds {

struct Ellipse {
  double intensity;
  double semi_x;
  double semi_y;
  double center_x;
  double center_y;
  double rotation_deg;
};

/// Ten-ellipse Shepp-Logan table with the contrast-enhanced intensities of
/// MATLAB's phantom('Modified Shepp-Logan'); values lie in [0, 1].
inline constexpr std::array<Ellipse, 10> kModifiedSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

/// Additive ellipse phantom in normalised coordinates [-1, 1]^2.
class EllipsePhantom {
 public:
  explicit EllipsePhantom(std::span<const Ellipse> ellipses) : ellipses_(ellipses.begin(), ellipses.end()) {}

  double value(double x, double y) const {
    double v = 0.0;
    for (const auto& e : ellipses_) {
      const double phi = e.rotation_deg * std::numbers::pi / 180.0;
      const double c = std::cos(phi), s = std::sin(phi);
      const double dx = x - e.center_x, dy = y - e.center_y;
      const double u = dx * c + dy * s;
      const double w = dy * c - dx * s;
      if (u * u / (e.semi_x * e.semi_x) + w * w / (e.semi_y * e.semi_y) <= 1.0) v += e.intensity;
    }
    return std::max(v, 0.0);
  }

  /// Samples at pixel centres of `grid`. `base_n` fixes the coordinate map:
  /// the outermost pixel centres of a base_n grid land on +-1, as MATLAB's
  /// phantom() does, and finer grids sample the same continuous object.
  Vector rasterize(const ImageGrid& grid, int base_n) const {
    detail::require(base_n >= 2, ErrorCode::InvalidArgument, "phantom side must be at least 2");
    const double to_unit = (static_cast<double>(base_n) / (base_n - 1)) / grid.half_width();
    Vector img(grid.size());
    for (int col = 0; col < grid.n; ++col) {
      const double x = grid.x_center(col) * to_unit;
      for (int row = 0; row < grid.n; ++row) {
        const double y = grid.y_center(row) * to_unit;
        img[grid.index(row, col)] = value(x, y);
      }
    }
    return img;
  }

 private:
  std::vector<Ellipse> ellipses_;
};

inline Vector shepp_logan(int n) {
  detail::require(n >= 2, ErrorCode::InvalidArgument, "phantom side must be at least 2");
  return EllipsePhantom(kModifiedSheppLogan).rasterize(ImageGrid(n, 1.0), n);
}

enum class NoiseReference { Peak, Rms };

inline NoiseReference parse_noise_reference(std::string_view s) {
  if (s == "peak") return NoiseReference::Peak;
  if (s == "rms") return NoiseReference::Rms;
  throw Error(ErrorCode::InvalidArgument, "noise reference must be 'peak' or 'rms', got '" + std::string(s) + "'");
}

/// Standard deviation sqrt(variance_fraction) * ref(m), ref = max|m| or rms(m).
inline double noise_sigma(std::span<const double> m, double variance_fraction, NoiseReference ref) {
  double scale = 0.0;
  if (ref == NoiseReference::Peak) {
    for (double v : m) scale = std::max(scale, std::abs(v));
  } else if (!m.empty()) {
    scale = norm2(m) / std::sqrt(static_cast<double>(m.size()));
  }
  return std::sqrt(variance_fraction) * scale;
}

/// m + eta with eta_k ~ N(0, sigma^2) i.i.d.; sample k is component k % 2 of
/// gaussian_pair(seed, k / 2) (cos branch first).
inline Vector add_gaussian_noise(std::span<const double> m, double variance_fraction, std::uint64_t seed,
                                 NoiseReference ref = NoiseReference::Peak) {
  detail::require(variance_fraction >= 0.0 && std::isfinite(variance_fraction), ErrorCode::InvalidArgument,
                  "noise variance fraction must be non-negative");
  Vector out(m.begin(), m.end());
  if (variance_fraction == 0.0) return out;
  const double sigma = noise_sigma(m, variance_fraction, ref);
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const auto [z0, z1] = gaussian_pair(seed, k / 2);
    out[k] += sigma * z0;
    if (k + 1 < out.size()) out[k + 1] += sigma * z1;
  }
  return out;
}

struct SimulationOptions {
  /// Rasterise the phantom on a 2x finer grid and project that instead.
  bool supersample = false;
};

/// Projects the phantom through the fan-beam geometry. Without supersampling
/// this is exactly forward_project on the reconstruction grid; with it, the
/// same continuous phantom is sampled on a 2n grid and traced matrix-free.
inline Vector simulate_sinogram(const EllipsePhantom& phantom, const FanBeamGeometry& geom, const ImageGrid& grid,
                                const SimulationOptions& options = {}) {
  if (!options.supersample) {
    const auto img = phantom.rasterize(grid, grid.n);
    return forward_project(MatrixFreeProjector(geom, grid), img);
  }
  const ImageGrid fine(2 * grid.n, grid.fov);
  const auto img = phantom.rasterize(fine, grid.n);
  return forward_project(MatrixFreeProjector(geom, fine), img);
}

/// Projects an already rasterised image.
inline Vector simulate_sinogram(std::span<const double> image, const FanBeamGeometry& geom, const ImageGrid& grid) {
  detail::require_size(image.size(), grid.size(), "phantom image");
  return forward_project(MatrixFreeProjector(geom, grid), image);
}

}  // namespace cwds
