#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cwds/pdfp.hpp"
#include "cwds/phantom.hpp"
#include "cwds/system_matrix.hpp"
#include "oracles.hpp"

using namespace cwds;

namespace {

struct Fixture {
  ImageGrid grid;
  FanBeamGeometry geom;
  SparseSystemMatrix A;
};

Fixture make(int n, int angles, int detectors) {
  ImageGrid grid(n, 1.0);
  auto geom = make_fan_beam(grid, angles, detectors, 2.0, 1.0);
  auto A = assemble_system_matrix(geom, grid);
  return {grid, geom, std::move(A)};
}

double rel_diff(const Vector& a, const Vector& b) {
  const double scale = std::max(norm2(a), norm2(b));
  return scale == 0.0 ? 0.0 : distance2(a, b) / scale;
}

}  // namespace

TEST(Assembly, RowsMatchTraceRayAndAreNonNegative) {
  const auto fx = make(16, 10, 24);
  const auto rays = build_rays(fx.geom);
  ASSERT_EQ(fx.A.rows(), rays.size());
  ASSERT_EQ(fx.A.cols(), fx.grid.size());
  EXPECT_FALSE(fx.A.norm_estimate.has_value());
  EXPECT_FALSE(fx.A.normalized);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const auto row = trace_ray(rays[r], fx.grid);
    const auto begin = fx.A.row_ptr()[r], end = fx.A.row_ptr()[r + 1];
    ASSERT_EQ(end - begin, row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      EXPECT_EQ(fx.A.indices()[begin + k], row[k].pixel);
      EXPECT_EQ(fx.A.values()[begin + k], row[k].length);
    }
  }
  for (double v : fx.A.values()) EXPECT_GE(v, 0.0);
}

TEST(Assembly, DeltaImageReproducesPerRayLengths) {
  const auto fx = make(12, 8, 20);
  const auto rays = build_rays(fx.geom);
  for (std::size_t p : {std::size_t{0}, std::size_t{65}, fx.grid.size() / 2 + 6}) {
    Vector delta(fx.grid.size(), 0.0);
    delta[p] = 1.0;
    const auto col = forward_project(fx.A, delta);
    for (std::size_t r = 0; r < rays.size(); ++r) {
      double expected = 0.0;
      for (const auto& e : trace_ray(rays[r], fx.grid))
        if (static_cast<std::size_t>(e.pixel) == p) expected += e.length;
      EXPECT_EQ(col[r], expected);
    }
  }
}

TEST(Assembly, ScaleGuardRefusesLargeProblems) {
  const ImageGrid grid(64, 1.0);
  const auto geom = make_fan_beam(grid, 60, 64, 2.0, 1.0);
  AssemblyOptions opts;
  opts.max_nonzeros = predicted_nonzeros(geom, grid) - 1;
  try {
    assemble_system_matrix(geom, grid, opts);
    FAIL() << "expected a scale guard error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScaleGuard);
  }
  opts.max_nonzeros = predicted_nonzeros(geom, grid);
  EXPECT_NO_THROW(assemble_system_matrix(geom, grid, opts));
}

TEST(Assembly, PredictedNonzerosIsAnUpperBound) {
  const auto fx = make(32, 20, 48);
  EXPECT_LE(fx.A.nonzeros(), predicted_nonzeros(fx.geom, fx.grid));
}

TEST(SparseMatrix, RejectsInconsistentCsr) {
  EXPECT_THROW(SparseSystemMatrix(3, {0, 2}, {0}, {1.0}), Error);
  EXPECT_THROW(SparseSystemMatrix(3, {0, 1}, {5}, {1.0}), Error);
  EXPECT_THROW(SparseSystemMatrix(3, {1, 1}, {0}, {1.0}), Error);
}

TEST(ForwardProject, ZeroAndLinearity) {
  const auto fx = make(16, 12, 20);
  const Vector zero(fx.grid.size(), 0.0);
  for (double v : forward_project(fx.A, zero)) EXPECT_EQ(v, 0.0);
  const auto f1 = oracle::random_vector(fx.grid.size(), 1);
  const auto f2 = oracle::random_vector(fx.grid.size(), 2);
  Vector sum(fx.grid.size());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = f1[k] + f2[k];
  auto a1 = forward_project(fx.A, f1);
  const auto a2 = forward_project(fx.A, f2);
  for (std::size_t k = 0; k < a1.size(); ++k) a1[k] += a2[k];
  EXPECT_LT(rel_diff(forward_project(fx.A, sum), a1), 1e-12);
}

TEST(ForwardProject, DimensionMismatchThrows) {
  const auto fx = make(8, 4, 8);
  Vector wrong(10), out(fx.A.rows());
  EXPECT_THROW(fx.A.apply(wrong, out), Error);
  EXPECT_THROW(forward_project(fx.A, wrong), Error);
  EXPECT_THROW(back_project(fx.A, wrong), Error);
}

TEST(ForwardProject, MatrixFreeMatchesAssembledOnSheppLogan) {
  const auto fx = make(64, 120, 64);
  const MatrixFreeProjector mf(fx.geom, fx.grid);
  const auto img = shepp_logan(64);
  EXPECT_LT(rel_diff(forward_project(fx.A, img), forward_project(mf, img)), 1e-12);
  const auto y = oracle::random_vector(fx.A.rows(), 9);
  EXPECT_LT(rel_diff(back_project(fx.A, y), back_project(mf, y)), 1e-12);
}

TEST(BackProject, ZeroSinogramGivesZeroImage) {
  const auto fx = make(8, 6, 10);
  for (double v : back_project(fx.A, Vector(fx.A.rows(), 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(BackProject, AdjointIdentityOnRandomPairs) {
  const auto fx = make(64, 60, 95);
  for (int pair = 0; pair < 10; ++pair) {
    const auto f = oracle::random_vector(fx.A.cols(), 100 + pair);
    const auto y = oracle::random_vector(fx.A.rows(), 200 + pair);
    const auto af = forward_project(fx.A, f);
    const auto aty = back_project(fx.A, y);
    const double defect = std::abs(dot(af, y) - dot(f, aty)) / (norm2(af) * norm2(y) + 1e-300);
    EXPECT_LT(defect, 1e-10);
  }
}

TEST(BackProject, SingleRaySupportEqualsTracedPixels) {
  const auto fx = make(16, 10, 24);
  const auto rays = build_rays(fx.geom);
  for (std::size_t r : {std::size_t{0}, std::size_t{37}, std::size_t{150}}) {
    Vector y(fx.A.rows(), 0.0);
    y[r] = 1.0;
    const auto img = back_project(fx.A, y);
    std::set<std::size_t> expected;
    for (const auto& e : trace_ray(rays[r], fx.grid)) expected.insert(static_cast<std::size_t>(e.pixel));
    std::set<std::size_t> support;
    for (std::size_t k = 0; k < img.size(); ++k)
      if (img[k] != 0.0) support.insert(k);
    EXPECT_EQ(support, expected);
  }
}

TEST(SpectralNorm, DiagonalPattern) {
  const Vector dense{1.0, 0.0, 0.0, 3.0};
  const auto A = SparseSystemMatrix::from_dense(2, 2, dense);
  EXPECT_NEAR(spectral_norm(A), 3.0, 3e-6);
}

TEST(SpectralNorm, MatchesDenseEigensolve) {
  const int k = 10;
  const auto dense = oracle::random_vector(k * k, 42);
  const auto A = SparseSystemMatrix::from_dense(k, k, dense);
  const double expected = oracle::dense_spectral_norm(dense, k, k);
  EXPECT_NEAR(spectral_norm(A) / expected, 1.0, 1e-5);
}

TEST(SpectralNorm, JacobiOracleSanity) {
  const oracle::Dense sym{2.0, 1.0, 1.0, 2.0};
  const auto ev = oracle::jacobi_eigenvalues(sym, 2);
  EXPECT_NEAR(ev[0], 1.0, 1e-14);
  EXPECT_NEAR(ev[1], 3.0, 1e-14);
}

TEST(SpectralNorm, Homogeneity) {
  const auto fx = make(16, 12, 24);
  const double base = spectral_norm(fx.A);
  EXPECT_NEAR(spectral_norm(fx.A.scaled(3.5)) / (3.5 * base), 1.0, 1e-6);
  const MatrixFreeProjector mf(fx.geom, fx.grid);
  EXPECT_NEAR(spectral_norm(mf.scaled(0.25)) / (0.25 * base), 1.0, 1e-6);
}

TEST(SpectralNorm, ZeroOperatorThrows) {
  const auto A = SparseSystemMatrix::from_dense(2, 2, Vector(4, 0.0));
  EXPECT_THROW(spectral_norm(A), Error);
}

TEST(Normalize, UnitNormAndScaledData) {
  const auto fx = make(32, 30, 48);
  const auto m = oracle::random_vector(fx.A.rows(), 5);
  const auto sys = normalize_system(fx.A, m);
  EXPECT_TRUE(sys.op.normalized);
  ASSERT_TRUE(sys.op.norm_estimate.has_value());
  EXPECT_EQ(*sys.op.norm_estimate, 1.0);
  const double n1 = spectral_norm(sys.op);
  EXPECT_GE(n1, 1.0 - 1e-4);
  EXPECT_LE(n1, 1.0 + 1e-4);
  for (std::size_t k = 0; k < m.size(); ++k) EXPECT_NEAR(sys.data[k], m[k] / sys.norm, 1e-15 * std::abs(m[k]) + 1e-300);

  const auto zero = normalize_system(fx.A, Vector(fx.A.rows(), 0.0));
  for (double v : zero.data) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, MatrixFreeAgreesWithAssembled) {
  const auto fx = make(16, 12, 24);
  const MatrixFreeProjector mf(fx.geom, fx.grid);
  const auto m = oracle::random_vector(fx.A.rows(), 6);
  EXPECT_NEAR(normalize_system(mf, m).norm / normalize_system(fx.A, m).norm, 1.0, 1e-12);
}

// Minimiser of 1/2||Af-m||^2 + theta||Wf||_1 is unchanged when (A, m) are both
// divided by s and theta by s^2. Solved on both scalings by the same fixed-mu
// PDFP iteration, with tau = 1/||A||^2 on the raw system.
TEST(Normalize, SolutionInvariantUnderJointScaling) {
  const int rows = 24, n = 4;
  auto dense = oracle::random_vector(rows * n * n, 77, 0.0, 1.0);
  for (auto& v : dense) v *= 5.0;
  const auto A = SparseSystemMatrix::from_dense(rows, n * n, dense);
  const auto truth = oracle::random_vector(n * n, 78, 0.5, 1.5);
  const auto m = forward_project(A, truth);
  const auto sys = normalize_system(A, m);

  const WaveletPlan plan(n, 2);
  const double mu = 0.02;
  PdfpParams raw{1.0 / (sys.norm * sys.norm), 0.99, plan};
  PdfpParams scaled{1.0, 0.99, plan};
  auto s_raw = PdfpState::zeros(n * n);
  auto s_scaled = PdfpState::zeros(n * n);
  for (int it = 0; it < 20000; ++it) {
    s_raw = pdfp_step(s_raw, mu, raw, A, m);
    s_scaled = pdfp_step(s_scaled, mu, scaled, sys.op, sys.data);
  }
  // Same theta: lambda mu / (2 tau) on the raw problem is ||A||^2 times the scaled one.
  EXPECT_NEAR(effective_l1_weight(mu, raw) / effective_l1_weight(mu, scaled), sys.norm * sys.norm, 1e-9);
  EXPECT_LT(rel_diff(s_raw.f, s_scaled.f), 1e-8);
}
