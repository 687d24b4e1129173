#include <gtest/gtest.h>

#include <cmath>

#include "cwds/phantom.hpp"
#include "oracles.hpp"

using namespace cwds;

TEST(SheppLogan, CornerIsBackgroundCentreIsInside) {
  const int n = 64;
  const ImageGrid grid(n, 1.0);
  const auto img = shepp_logan(n);
  EXPECT_EQ(img[grid.index(0, 0)], 0.0);
  EXPECT_EQ(img[grid.index(n - 1, n - 1)], 0.0);
  EXPECT_GT(img[grid.index(n / 2, n / 2)], 0.0);
}

TEST(SheppLogan, ValuesInUnitIntervalAndFinite) {
  for (int n : {2, 17, 128}) {
    const auto img = shepp_logan(n);
    ASSERT_EQ(img.size(), static_cast<std::size_t>(n) * n);
    for (double v : img) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_THROW(shepp_logan(1), Error);
}

TEST(SheppLogan, ContinuousValuesFromTable) {
  const EllipsePhantom ph(kModifiedSheppLogan);
  EXPECT_DOUBLE_EQ(ph.value(0.0, 0.0), 1.0 - 0.8);             // skull minus brain
  EXPECT_DOUBLE_EQ(ph.value(0.0, 0.35), 1.0 - 0.8 + 0.1);      // large upper ellipse
  EXPECT_NEAR(ph.value(0.0, 0.9), 1.0, 1e-15);                 // skull rim
  EXPECT_NEAR(ph.value(0.22, 0.0), 0.0, 1e-15);                // right dark ellipse
  EXPECT_EQ(ph.value(0.95, 0.95), 0.0);
}

TEST(SheppLogan, OuterPixelCentresMapToUnitSquareEdge) {
  // A thin horizontal bar reaches the outermost pixel centres only if they map onto +-1.
  const int n = 9;
  const ImageGrid grid(n, 1.0);
  const std::array<Ellipse, 1> wide{{{1.0, 1.001, 0.05, 0.0, 0.0, 0.0}}};
  const std::array<Ellipse, 1> narrow{{{1.0, 0.999, 0.05, 0.0, 0.0, 0.0}}};
  const auto a = EllipsePhantom(wide).rasterize(grid, n);
  const auto b = EllipsePhantom(narrow).rasterize(grid, n);
  EXPECT_EQ(a[grid.index(n / 2, 0)], 1.0);
  EXPECT_EQ(a[grid.index(n / 2, n - 1)], 1.0);
  EXPECT_EQ(b[grid.index(n / 2, 0)], 0.0);
  EXPECT_EQ(b[grid.index(n / 2, n - 1)], 0.0);
  EXPECT_EQ(b[grid.index(n / 2, 1)], 1.0);
  EXPECT_EQ(a[grid.index(n / 2 - 1, 0)], 0.0);
}

TEST(SheppLogan, DeterministicBitForBit) { EXPECT_EQ(shepp_logan(96), shepp_logan(96)); }

TEST(SheppLogan, SupersampledRasterSamplesSameObject) {
  const EllipsePhantom ph(kModifiedSheppLogan);
  const int n = 32;
  const auto coarse = ph.rasterize(ImageGrid(n, 1.0), n);
  const auto fine = ph.rasterize(ImageGrid(2 * n, 1.0), n);
  // Averages of 2x2 fine blocks agree with the coarse image away from edges.
  const ImageGrid cg(n, 1.0), fg(2 * n, 1.0);
  int agree = 0;
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      const double avg = 0.25 * (fine[fg.index(2 * r, 2 * c)] + fine[fg.index(2 * r + 1, 2 * c)] +
                                 fine[fg.index(2 * r, 2 * c + 1)] + fine[fg.index(2 * r + 1, 2 * c + 1)]);
      if (std::abs(avg - coarse[cg.index(r, c)]) < 1e-12) ++agree;
    }
  EXPECT_GT(agree, n * n * 3 / 4);
}

TEST(Noise, SplitMix64ReferenceOutputs) {
  // Published first outputs of SplitMix64 seeded with 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(rng.next(), 0x06C45D188009454Full);
  EXPECT_EQ(SplitMix64::at(0, 2), 0x06C45D188009454Full);
}

TEST(Noise, UnitMappingStaysInHalfOpenInterval) {
  EXPECT_GT(SplitMix64::to_unit(0), 0.0);
  EXPECT_EQ(SplitMix64::to_unit(~0ull), 1.0);
}

TEST(Noise, ZeroFractionIsIdentity) {
  const auto m = oracle::random_vector(101, 1);
  EXPECT_EQ(add_gaussian_noise(m, 0.0, 3), m);
  EXPECT_THROW(add_gaussian_noise(m, -0.1, 3), Error);
}

TEST(Noise, SampleMeanAndVariance) {
  const std::size_t count = 1'000'000;
  const Vector m(count, 2.0);
  const double frac = 0.001;
  const auto noisy = add_gaussian_noise(m, frac, 20240611);
  const double sigma = std::sqrt(frac) * 2.0;
  double mean = 0.0;
  for (std::size_t k = 0; k < count; ++k) mean += noisy[k] - m[k];
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double e = (noisy[k] - m[k]) / 2.0;
    var += e * e;
  }
  var /= static_cast<double>(count);
  EXPECT_LT(std::abs(mean), 5.0 * sigma / 1e3);
  EXPECT_NEAR(var / frac, 1.0, 0.01);
}

TEST(Noise, ReproducibleAndSeedDependent) {
  const auto m = oracle::random_vector(1001, 2, 0.0, 3.0);
  const auto a = add_gaussian_noise(m, 0.001, 7);
  EXPECT_EQ(a, add_gaussian_noise(m, 0.001, 7));
  EXPECT_NE(a, add_gaussian_noise(m, 0.001, 8));
  EXPECT_EQ(a.size(), m.size());
}

TEST(Noise, SamplesFollowDocumentedPairing) {
  const Vector m{0.0, 0.0, 0.0, 1.0, 0.0};
  const auto noisy = add_gaussian_noise(m, 0.25, 99);
  const double sigma = 0.5;
  const auto [z0, z1] = gaussian_pair(99, 0);
  const auto [z2, z3] = gaussian_pair(99, 1);
  const auto [z4, z5] = gaussian_pair(99, 2);
  (void)z5;
  EXPECT_EQ(noisy[0], sigma * z0);
  EXPECT_EQ(noisy[1], sigma * z1);
  EXPECT_EQ(noisy[2], sigma * z2);
  EXPECT_EQ(noisy[3], 1.0 + sigma * z3);
  EXPECT_EQ(noisy[4], sigma * z4);
}

TEST(Noise, ReferenceLevels) {
  const Vector m{3.0, -4.0};
  EXPECT_DOUBLE_EQ(noise_sigma(m, 0.04, NoiseReference::Peak), 0.2 * 4.0);
  EXPECT_DOUBLE_EQ(noise_sigma(m, 0.04, NoiseReference::Rms), 0.2 * std::sqrt(12.5));
  EXPECT_EQ(parse_noise_reference("peak"), NoiseReference::Peak);
  EXPECT_EQ(parse_noise_reference("rms"), NoiseReference::Rms);
  EXPECT_THROW(parse_noise_reference("mean"), Error);
}

TEST(Simulate, ZeroPhantomGivesZeroSinogram) {
  const ImageGrid grid(16, 1.0);
  const auto geom = make_fan_beam(grid, 10, 20, 2.0, 1.0);
  for (double v : simulate_sinogram(Vector(grid.size(), 0.0), geom, grid)) EXPECT_EQ(v, 0.0);
  const std::array<Ellipse, 1> empty{{{1.0, 0.1, 0.1, 5.0, 5.0, 0.0}}};
  for (double v : simulate_sinogram(EllipsePhantom(empty), geom, grid)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(simulate_sinogram(Vector(3, 0.0), geom, grid), Error);
}

TEST(Simulate, WithoutSupersamplingEqualsForwardProjection) {
  const ImageGrid grid(32, 1.0);
  const auto geom = make_fan_beam(grid, 24, 40, 2.0, 1.0);
  const EllipsePhantom ph(kModifiedSheppLogan);
  const auto A = assemble_system_matrix(geom, grid);
  EXPECT_EQ(simulate_sinogram(ph, geom, grid), forward_project(MatrixFreeProjector(geom, grid), shepp_logan(32)));
  const auto a = forward_project(A, shepp_logan(32));
  const auto b = simulate_sinogram(ph, geom, grid);
  EXPECT_LT(distance2(a, b) / norm2(a), 1e-13);
}

TEST(Simulate, SupersampledDataCloseToPlain) {
  const ImageGrid grid(128, 1.0);
  const auto geom = make_fan_beam(grid, 120, 128, 2.0, 1.0);
  const EllipsePhantom ph(kModifiedSheppLogan);
  const auto plain = simulate_sinogram(ph, geom, grid, {false});
  const auto fine = simulate_sinogram(ph, geom, grid, {true});
  ASSERT_EQ(plain.size(), fine.size());
  EXPECT_LT(distance2(plain, fine) / norm2(plain), 5e-2);
  EXPECT_GT(distance2(plain, fine), 0.0);
}
