#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/image.hpp"

namespace cwds {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Pencil-beam line with unit-norm direction.
struct Ray {
  Point2 origin;
  Point2 direction;
};

/// One stored entry of a system-matrix row: pixel index and intersection length.
struct RowEntry {
  std::int32_t pixel = 0;
  double length = 0.0;
};

/// Fan-beam acquisition with a flat detector.
///
/// At angle theta the source sits at source_radius * (cos theta, sin theta);
/// the detector is a line perpendicular to the central ray at distance
/// detector_radius on the far side of the origin. Cell c is centred at offset
/// (c - (num_detectors - 1) / 2) * detector_width along (-sin theta, cos theta).
struct FanBeamGeometry {
  std::vector<double> angles;
  int num_detectors = 0;
  double source_radius = 0.0;
  double detector_radius = 0.0;
  double detector_width = 0.0;

  int num_angles() const { return static_cast<int>(angles.size()); }
  std::size_t num_rays() const { return angles.size() * static_cast<std::size_t>(num_detectors); }

  double detector_offset(int cell) const { return (cell - 0.5 * (num_detectors - 1)) * detector_width; }

  /// Detector offsets rescaled onto the line through the origin (virtual detector).
  double magnification() const { return (source_radius + detector_radius) / source_radius; }

  void validate(const ImageGrid& grid) const {
    detail::require(!angles.empty(), ErrorCode::InvalidArgument, "geometry needs at least one angle");
    detail::require(num_detectors > 0, ErrorCode::InvalidArgument, "geometry needs at least one detector");
    detail::require(detector_width > 0.0, ErrorCode::InvalidArgument, "detector width must be positive");
    detail::require(detector_radius >= 0.0, ErrorCode::InvalidArgument, "detector radius must be non-negative");
    detail::require(source_radius > grid.fov * std::numbers::sqrt2 / 2.0, ErrorCode::InvalidArgument,
                    "source must lie outside the image square");
  }
};

inline std::vector<double> equispaced_angles(int count, double start = 0.0,
                                             double range = 2.0 * std::numbers::pi) {
  detail::require(count > 0, ErrorCode::InvalidArgument, "angle count must be positive");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int a = 0; a < count; ++a) out[static_cast<std::size_t>(a)] = start + range * a / count;
  return out;
}

/// Detector cell width at which the fan exactly covers the circle circumscribing the image square.
inline double covering_detector_width(const ImageGrid& grid, double source_radius, double detector_radius,
                                      int num_detectors) {
  const double r = grid.fov * std::numbers::sqrt2 / 2.0;
  detail::require(source_radius > r, ErrorCode::InvalidArgument, "source must lie outside the image square");
  const double half_angle = std::asin(r / source_radius);
  return 2.0 * (source_radius + detector_radius) * std::tan(half_angle) / num_detectors;
}

inline FanBeamGeometry make_fan_beam(const ImageGrid& grid, int num_angles, int num_detectors,
                                     double source_radius, double detector_radius) {
  FanBeamGeometry g;
  g.angles = equispaced_angles(num_angles);
  g.num_detectors = num_detectors;
  g.source_radius = source_radius;
  g.detector_radius = detector_radius;
  g.detector_width = covering_detector_width(grid, source_radius, detector_radius, num_detectors);
  return g;
}

inline Point2 source_position(const FanBeamGeometry& geom, int angle) {
  const double th = geom.angles[static_cast<std::size_t>(angle)];
  return {geom.source_radius * std::cos(th), geom.source_radius * std::sin(th)};
}

/// Ray k = angle * num_detectors + cell, from the source to the detector cell centre.
inline Ray make_ray(const FanBeamGeometry& geom, int angle, int cell) {
  const double th = geom.angles[static_cast<std::size_t>(angle)];
  const double c = std::cos(th), s = std::sin(th);
  const Point2 src{geom.source_radius * c, geom.source_radius * s};
  const double u = geom.detector_offset(cell);
  const Point2 det{-geom.detector_radius * c - u * s, -geom.detector_radius * s + u * c};
  const double dx = det.x - src.x, dy = det.y - src.y;
  const double len = std::hypot(dx, dy);
  return {src, {dx / len, dy / len}};
}

inline std::vector<Ray> build_rays(const FanBeamGeometry& geom) {
  detail::require(geom.num_angles() > 0, ErrorCode::InvalidArgument, "geometry needs at least one angle");
  detail::require(geom.num_detectors > 0, ErrorCode::InvalidArgument, "geometry needs at least one detector");
  std::vector<Ray> rays;
  rays.reserve(geom.num_rays());
  for (int a = 0; a < geom.num_angles(); ++a)
    for (int c = 0; c < geom.num_detectors; ++c) rays.push_back(make_ray(geom, a, c));
  return rays;
}

namespace detail {

struct Interval {
  double enter = 0.0;
  double exit = 0.0;
  bool empty() const { return !(exit > enter); }
};

// Parametric interval of the ray inside [-half, half]^2.
inline Interval clip_to_square(const Ray& ray, double half) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double o[2] = {ray.origin.x, ray.origin.y};
  const double d[2] = {ray.direction.x, ray.direction.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < -half || o[axis] > half) return {0.0, 0.0};
      continue;
    }
    const double ta = (-half - o[axis]) / d[axis];
    const double tb = (half - o[axis]) / d[axis];
    t0 = std::max(t0, std::min(ta, tb));
    t1 = std::min(t1, std::max(ta, tb));
  }
  return {t0, t1};
}

// Plane crossings strictly inside (enter, exit), ascending in t.
inline void plane_crossings(double origin, double direction, double half, double h, int n, Interval span,
                            std::vector<double>& out) {
  out.clear();
  if (direction == 0.0) return;
  for (int k = 0; k <= n; ++k) {
    const double t = (-half + k * h - origin) / direction;
    if (t > span.enter && t < span.exit) out.push_back(t);
  }
  if (direction < 0.0) std::reverse(out.begin(), out.end());
}

}  // namespace detail

/// Length of the ray's chord inside the image square.
inline double chord_length(const Ray& ray, const ImageGrid& grid) {
  const auto span = detail::clip_to_square(ray, grid.half_width());
  return span.empty() ? 0.0 : span.exit - span.enter;
}

/// Exact ray/pixel intersection lengths by parametric (Siddon) traversal.
///
/// The chord inside the square is split at every grid-line crossing; each
/// segment is attributed to the pixel containing its midpoint, with pixel
/// intervals half-open in index space. Segments shorter than 1e-12 pixel
/// widths (corner grazes) are dropped. Entries are appended to `row` in
/// traversal order.
inline void trace_ray(const Ray& ray, const ImageGrid& grid, std::vector<RowEntry>& row) {
  const double half = grid.half_width();
  const double h = grid.pixel_size();
  const auto span = detail::clip_to_square(ray, half);
  if (span.empty()) return;

  thread_local std::vector<double> xs, ys, ts;
  detail::plane_crossings(ray.origin.x, ray.direction.x, half, h, grid.n, span, xs);
  detail::plane_crossings(ray.origin.y, ray.direction.y, half, h, grid.n, span, ys);
  ts.clear();
  ts.reserve(xs.size() + ys.size() + 2);
  ts.push_back(span.enter);
  std::merge(xs.begin(), xs.end(), ys.begin(), ys.end(), std::back_inserter(ts));
  ts.push_back(span.exit);

  const double min_len = 1e-12 * h;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= min_len) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const double xm = ray.origin.x + tm * ray.direction.x;
    const double ym = ray.origin.y + tm * ray.direction.y;
    const int col = std::clamp(static_cast<int>(std::floor((xm + half) / h)), 0, grid.n - 1);
    const int rw = std::clamp(static_cast<int>(std::floor((half - ym) / h)), 0, grid.n - 1);
    row.push_back({static_cast<std::int32_t>(grid.index(rw, col)), len});
  }
}

inline std::vector<RowEntry> trace_ray(const Ray& ray, const ImageGrid& grid) {
  std::vector<RowEntry> row;
  trace_ray(ray, grid, row);
  return row;
}

}  // namespace cwds
