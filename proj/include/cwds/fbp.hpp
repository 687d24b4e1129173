#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/geometry.hpp"
#include "cwds/image.hpp"
#include "cwds/system_matrix.hpp"

namespace cwds {

/// Ram-Lak ramp filter with an optional cutoff as a fraction of Nyquist.
struct FilterSpec {
  double cutoff = 1.0;

  void validate() const {
    detail::require(cutoff > 0.0 && cutoff <= 1.0, ErrorCode::InvalidArgument, "filter cutoff must lie in (0, 1]");
  }

  /// Next power of two >= 2 * num_detectors.
  static std::size_t padded_length(int num_detectors) {
    std::size_t p = 1;
    while (p < 2 * static_cast<std::size_t>(num_detectors)) p <<= 1;
    return p;
  }
};

namespace detail {

struct FftwBuffer {
  void operator()(void* p) const { fftw_free(p); }
};

// Real-to-complex / complex-to-real plan pair of a fixed length.
class RealFft {
 public:
  explicit RealFft(std::size_t length)
      : length_(length),
        real_(static_cast<double*>(fftw_malloc(sizeof(double) * length))),
        spec_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (length / 2 + 1)))) {
    const int len = static_cast<int>(length);
    forward_ = fftw_plan_dft_r2c_1d(len, real_.get(), spec_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(len, spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::span<double> real() { return {real_.get(), length_}; }
  std::span<fftw_complex> spectrum() { return {spec_.get(), length_ / 2 + 1}; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }  // unnormalised

 private:
  std::size_t length_;
  std::unique_ptr<double, FftwBuffer> real_;
  std::unique_ptr<fftw_complex, FftwBuffer> spec_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// Frequency response of the discrete spatial Ram-Lak kernel
//   h(0) = 1/(4 ds^2), h(k odd) = -1/(pi k ds)^2, h(k even) = 0,
// laid out circularly in a zero-padded buffer, times ds for the convolution
// sum and 1/2 for the full-turn fan-beam redundancy.
inline std::vector<double> ramp_response(RealFft& fft, int num_detectors, double ds, double cutoff) {
  auto buf = fft.real();
  std::fill(buf.begin(), buf.end(), 0.0);
  const std::size_t len = buf.size();
  buf[0] = 1.0 / (4.0 * ds * ds);
  for (int k = 1; k < num_detectors; k += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * k * k * ds * ds);
    buf[static_cast<std::size_t>(k)] = v;
    buf[len - static_cast<std::size_t>(k)] = v;
  }
  fft.forward();
  auto spec = fft.spectrum();
  std::vector<double> response(spec.size());
  for (std::size_t f = 0; f < spec.size(); ++f) {
    const double freq = static_cast<double>(f) / static_cast<double>(len);  // cycles per sample
    const double keep = freq <= 0.5 * cutoff + 1e-12 ? 1.0 : 0.0;
    response[f] = spec[f][0] * keep * ds * 0.5;
  }
  return response;
}

}  // namespace detail

/// Ramp-filtered, cosine-weighted projections on the virtual detector
/// through the origin; one row of num_detectors samples per view.
inline Vector filter_projections(std::span<const double> sinogram, const FanBeamGeometry& geom,
                                 const FilterSpec& filter = {}) {
  filter.validate();
  const int nd = geom.num_detectors;
  detail::require_size(sinogram.size(), geom.num_rays(), "sinogram");
  const double R = geom.source_radius;
  const double ds = geom.detector_width / geom.magnification();

  detail::RealFft fft(FilterSpec::padded_length(nd));
  const auto response = detail::ramp_response(fft, nd, ds, filter.cutoff);
  const double inv_len = 1.0 / static_cast<double>(fft.real().size());

  Vector out(sinogram.size());
  for (int a = 0; a < geom.num_angles(); ++a) {
    auto buf = fft.real();
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int c = 0; c < nd; ++c) {
      const double s = geom.detector_offset(c) / geom.magnification();
      buf[static_cast<std::size_t>(c)] =
          sinogram[static_cast<std::size_t>(a) * nd + c] * R / std::sqrt(R * R + s * s);
    }
    fft.forward();
    auto spec = fft.spectrum();
    for (std::size_t f = 0; f < spec.size(); ++f) {
      spec[f][0] *= response[f];
      spec[f][1] *= response[f];
    }
    fft.backward();
    for (int c = 0; c < nd; ++c)
      out[static_cast<std::size_t>(a) * nd + c] = buf[static_cast<std::size_t>(c)] * inv_len;
  }
  return out;
}

/// Fan-beam filtered backprojection for a flat detector and a full turn of
/// equispaced views. Each pixel centre gathers U^-2 Q(s') over all views, with
/// U the source distance ratio and Q linearly interpolated at the pixel's
/// virtual-detector coordinate s'. The result is not clipped.
inline Vector fbp_reconstruct(std::span<const double> sinogram, const FanBeamGeometry& geom, const ImageGrid& grid,
                              const FilterSpec& filter = {}) {
  geom.validate(grid);
  const auto q = filter_projections(sinogram, geom, filter);
  const int nd = geom.num_detectors;
  const double R = geom.source_radius;
  const double ds = geom.detector_width / geom.magnification();
  const double dtheta = 2.0 * std::numbers::pi / geom.num_angles();
  const double centre = 0.5 * (nd - 1);

  Vector image(grid.size(), 0.0);
  for (int a = 0; a < geom.num_angles(); ++a) {
    const double th = geom.angles[static_cast<std::size_t>(a)];
    const double c = std::cos(th), s = std::sin(th);
    const double* row = q.data() + static_cast<std::size_t>(a) * nd;
    for (int col = 0; col < grid.n; ++col) {
      const double x = grid.x_center(col);
      for (int rw = 0; rw < grid.n; ++rw) {
        const double y = grid.y_center(rw);
        const double depth = R - (x * c + y * s);
        const double lateral = -x * s + y * c;
        const double pos = R * lateral / depth / ds + centre;
        if (pos < 0.0 || pos > nd - 1) continue;
        const int i0 = std::min(static_cast<int>(pos), nd - 2 < 0 ? 0 : nd - 2);
        const double t = pos - i0;
        const double val = nd == 1 ? row[0] : (1.0 - t) * row[i0] + t * row[i0 + 1];
        const double u = depth / R;
        image[grid.index(rw, col)] += dtheta * val / (u * u);
      }
    }
  }
  return image;
}

/// Unfiltered backprojection A^T m.
template <LinearOperator Op>
Vector plain_backprojection(std::span<const double> m, const Op& A) {
  return back_project(A, m);
}

}  // namespace cwds
