#pragma once

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "cwds/controller.hpp"
#include "cwds/error.hpp"
#include "cwds/image.hpp"

namespace cwds {

static_assert(std::endian::native == std::endian::little, "matrix container I/O assumes a little-endian host");

inline constexpr std::string_view kMatrixMagic = "CWDS-MAT 1";

/// Dense row-major matrix as stored in the container format.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::Io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move result into '" + path.string() + "'");
  }
}

/// Container layout: "CWDS-MAT 1\n", "<rows> <cols> f64le\n", then
/// rows*cols little-endian IEEE doubles in row-major order.
inline void write_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                         std::span<const double> data) {
  detail::require_size(data.size(), rows * cols, "matrix payload");
  atomic_write(path, [&](std::ostream& out) {
    out << kMatrixMagic << '\n' << rows << ' ' << cols << " f64le\n";
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  });
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_matrix(path, m.rows, m.cols, m.data);
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != kMatrixMagic) throw Error(ErrorCode::UnrecognizedFormat, "'" + path.string() + "' is not a CWDS-MAT 1 file");

  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  long long rows = -1, cols = -1;
  std::string dtype, extra;
  if (!(hs >> rows >> cols >> dtype) || (hs >> extra) || rows < 0 || cols < 0)
    throw Error(ErrorCode::UnrecognizedFormat, "malformed header in '" + path.string() + "'");
  if (dtype != "f64le") throw Error(ErrorCode::DtypeMismatch, "dtype '" + dtype + "' in '" + path.string() + "', expected f64le");

  Matrix m{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), {}};
  m.data.resize(m.rows * m.cols);
  const auto bytes = static_cast<std::streamsize>(m.data.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(m.data.data()), bytes);
  if (in.gcount() != bytes)
    throw Error(ErrorCode::TruncatedPayload, "'" + path.string() + "' holds " + std::to_string(in.gcount()) +
                                                 " payload bytes, expected " + std::to_string(bytes));
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::UnrecognizedFormat, "trailing bytes after payload in '" + path.string() + "'");
  return m;
}

/// Image (column-stacked) to an n x n row-major container matrix, and back.
inline Matrix image_to_matrix(std::span<const double> f, int n) {
  const ImageGrid grid(n, 1.0);
  detail::require_size(f.size(), grid.size(), "image");
  Matrix m{static_cast<std::size_t>(n), static_cast<std::size_t>(n), std::vector<double>(f.size())};
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m.data[static_cast<std::size_t>(r) * n + c] = f[grid.index(r, c)];
  return m;
}

inline Vector matrix_to_image(const Matrix& m) {
  detail::require(m.rows == m.cols && m.rows > 0, ErrorCode::DimensionMismatch,
                  "image container must be square, got " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
  const ImageGrid grid(static_cast<int>(m.rows), 1.0);
  Vector f(grid.size());
  for (int r = 0; r < grid.n; ++r)
    for (int c = 0; c < grid.n; ++c) f[grid.index(r, c)] = m.data[static_cast<std::size_t>(r) * grid.n + c];
  return f;
}

inline double relative_error(std::span<const double> reconstruction, std::span<const double> truth) {
  detail::require_size(reconstruction.size(), truth.size(), "reconstruction");
  const double denom = norm2(truth);
  detail::require(denom > 0.0, ErrorCode::InvalidArgument, "relative error against a zero ground truth");
  return distance2(reconstruction, truth) / denom;
}

/// Maps [low, high] affinely onto [0, 65535], clamping outside values.
/// A degenerate window (low == high) yields uniform mid-gray.
inline std::uint16_t window_pixel(double value, double low, double high) {
  if (!(high > low)) return 32768;
  const double t = std::clamp((value - low) / (high - low), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

/// 16-bit binary PGM (P5, big-endian samples). Returns false when the window
/// was degenerate and the image was written as uniform mid-gray.
inline bool export_image_pgm(std::span<const double> f, int n, const std::filesystem::path& path, double low,
                             double high) {
  const ImageGrid grid(n, 1.0);
  detail::require_size(f.size(), grid.size(), "image");
  detail::require(all_finite(f), ErrorCode::NonFinite, "cannot export an image with non-finite pixels");
  atomic_write(path, [&](std::ostream& out) {
    out << "P5\n" << n << ' ' << n << "\n65535\n";
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const auto v = window_pixel(f[grid.index(r, c)], low, high);
        const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
        out.write(bytes, 2);
      }
    }
  });
  return high > low;
}

/// Trace CSV: "# key = value" preamble lines, then the header
/// i,mu,beta,C,e,d,objective and one row per iteration.
inline void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  for (const auto& [k, v] : trace.metadata) out << "# " << k << " = " << v << '\n';
  out << "# initial_mu = " << std::setprecision(17) << trace.initial_mu << '\n';
  out << "# initial_beta = " << trace.initial_beta << '\n';
  out << "# stop_reason = " << to_string(trace.stop_reason) << '\n';
  out << "i,mu,beta,C,e,d,objective\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.mu << ',' << r.beta << ',' << r.sparsity << ',' << r.error << ',' << r.change << ','
        << r.objective << '\n';
  }
}

inline void write_trace_csv(const std::filesystem::path& path, const IterationTrace& trace) {
  atomic_write(path, [&](std::ostream& out) { write_trace_csv(out, trace); });
}

}  // namespace cwds
