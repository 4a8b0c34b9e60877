#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <tracext/besov.hpp>
#include <tracext/families.hpp>

#include "oracle.hpp"

using namespace tracext;

namespace {

// Cyclic boundary of n samples with spacing h: the periodic-in-x edge.
SampledSpace ring(std::size_t n, double h, double nu_scale = 1.0) {
  std::vector<std::vector<double>> t(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t g = i > j ? i - j : j - i;
      t[i][j] = h * static_cast<double>(std::min(g, n - g));
    }
  return SampledSpace::from_table(t, std::vector<double>(n, h * nu_scale));
}

std::vector<double> cos_values(const Domain& d) {
  std::vector<double> f;
  for (std::size_t b : d.boundary()) f.push_back(std::cos(2 * std::numbers::pi * d.space().point(b).x));
  return f;
}

const BesovParams kHalf{0.5, 2.0, 1.0, std::nullopt, std::nullopt};

}  // namespace

TEST(Besov, ConstantsVanish) {
  const auto d = make_halfplane(1.0 / 8);
  const auto f = constant_field(d, Support::boundary, 3.25);
  EXPECT_EQ(besov_dyadic(f, d, kHalf).power, 0.0);
  EXPECT_EQ(besov_double_integral(f, d, kHalf).power, 0.0);
  EXPECT_EQ(besov_continuous(f, d, kHalf).power, 0.0);
}

TEST(Besov, Homogeneity) {
  const auto d = make_halfplane(1.0 / 8);
  const auto f = cos_values(d);
  std::vector<double> g(f);
  for (double& v : g) v *= -2.5;
  for (double p : {1.0, 2.0, 3.0}) {
    const BesovParams bp{0.3, p, 1.0, std::nullopt, std::nullopt};
    const auto& s = d.boundary_space();
    EXPECT_NEAR(besov_dyadic(s, g, bp).power, std::pow(2.5, p) * besov_dyadic(s, f, bp).power,
                1e-12 * besov_dyadic(s, g, bp).power);
    EXPECT_NEAR(besov_double_integral(s, g, bp).value, 2.5 * besov_double_integral(s, f, bp).value, 1e-10);
    EXPECT_NEAR(besov_continuous(s, g, bp, default_radius_grid(s, bp)).value,
                2.5 * besov_continuous(s, f, bp, default_radius_grid(s, bp)).value, 1e-10);
  }
}

TEST(Besov, DyadicMatchesDirectSummation) {
  const double h = 1.0 / 16;
  const auto d = make_halfplane(h);
  const auto f = cos_values(d);
  std::vector<Point2> pts;
  for (std::size_t b : d.boundary()) pts.push_back(d.space().point(b));
  // truncation ceil(log2 h) = -4 .. ceil(log2 8) + 1 = 4
  const double ref = oracle::besov_dyadic(pts, d.nu_weights(), f, 0.5, 2.0, 1.0, -4, 4);
  const auto got = besov_dyadic(d.boundary_space(), f, kHalf);
  EXPECT_NEAR(got.power, ref, 1e-10 * ref);
  ASSERT_EQ(got.per_level.size(), 9u);
  EXPECT_EQ(got.per_level.front().level, -4);
  EXPECT_EQ(got.per_level.back().level, 4);
  EXPECT_NEAR(got.value, std::sqrt(got.power), 1e-15);
  const BesovParams c3{0.5, 2.0, 3.0, std::nullopt, std::nullopt};
  EXPECT_NEAR(besov_dyadic(d.boundary_space(), f, c3).power,
              oracle::besov_dyadic(pts, d.nu_weights(), f, 0.5, 2.0, 3.0, -4, 4), 1e-10 * ref);
}

TEST(Besov, DoubleIntegralTwoPoints) {
  const auto s = SampledSpace::euclidean({{0, 0}, {1, 0}}, {1, 1});
  const std::vector<double> f{0, 1};
  EXPECT_DOUBLE_EQ(besov_double_integral(s, f, kHalf).power, 2.0);
}

TEST(Besov, DoubleIntegralMatchesDirectSummation) {
  const auto d = make_halfplane(1.0 / 16);
  const auto f = cos_values(d);
  std::vector<Point2> pts;
  for (std::size_t b : d.boundary()) pts.push_back(d.space().point(b));
  const double ref = oracle::besov_double(pts, d.nu_weights(), f, 0.5, 2.0);
  EXPECT_NEAR(besov_double_integral(d.boundary_space(), f, kHalf).power, ref, 1e-10 * ref);
}

TEST(Besov, DuplicatePointsRejected) {
  const auto s = SampledSpace::euclidean({{0, 0}, {1, 0}, {1, 0}}, {1, 1, 1});
  const std::vector<double> f{0, 1, 2};
  EXPECT_THROW(besov_double_integral(s, f, kHalf), DataError);
}

TEST(Besov, ParameterErrors) {
  const auto s = SampledSpace::euclidean({{0, 0}, {1, 0}}, {1, 1});
  const std::vector<double> f{0, 1};
  EXPECT_THROW(besov_dyadic(s, f, BesovParams{0.5, 0.5, 1.0, std::nullopt, std::nullopt}), UsageError);
  EXPECT_THROW(besov_double_integral(s, f, BesovParams{-0.5, 2, 1.0, std::nullopt, std::nullopt}), UsageError);
  const std::vector<double> unsorted{0.5, 0.25};
  const std::vector<double> negative{-1, 1};
  EXPECT_THROW(besov_continuous(s, f, kHalf, unsorted), UsageError);
  EXPECT_THROW(besov_continuous(s, f, kHalf, negative), UsageError);
  const std::vector<double> bad{0, std::nan("")};
  EXPECT_THROW(besov_dyadic(s, bad, kHalf), DataError);
  const std::vector<double> short_f{0};
  EXPECT_THROW(besov_dyadic(s, short_f, kHalf), DataError);
}

TEST(Besov, MasslessBallsSkipped) {
  const auto s = SampledSpace::euclidean({{0, 0}, {1, 0}, {2, 0}}, {0, 1, 1});
  const std::vector<double> f{5, 1, 2};
  const auto r = besov_dyadic(s, f, kHalf);
  EXPECT_GT(r.skipped, 0u);
  EXPECT_GT(r.power, 0.0);
}

TEST(Besov, DyadicDoubleRatioStableUnderRefinement) {
  double prev = 0.0;
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const auto d = make_halfplane(h);
    const auto f = cos_values(d);
    const double q = besov_dyadic(d.boundary_space(), f, kHalf).value /
                     besov_double_integral(d.boundary_space(), f, kHalf).value;
    EXPECT_GT(q, 0.25);
    EXPECT_LT(q, 4.0);
    if (prev > 0.0) {
      EXPECT_LT(std::max(q / prev, prev / q), 1.25);
    }
    prev = q;
  }
}

TEST(Besov, ContinuousGridRefinement) {
  const auto d = make_halfplane(1.0 / 16);
  const auto f = cos_values(d);
  const auto& s = d.boundary_space();
  const double a = besov_continuous(s, f, kHalf, default_radius_grid(s, kHalf, 16)).value;
  const double b = besov_continuous(s, f, kHalf, default_radius_grid(s, kHalf, 32)).value;
  EXPECT_LT(std::abs(a - b) / b, 0.01);
}

TEST(Besov, ContinuousWithinFactorTwoOfDyadic) {
  const auto d = make_halfplane(1.0 / 16);
  const auto fam = sample_family(d, Support::boundary, boundary_family(bounding_box(d), {}));
  for (const auto& [name, f] : fam) {
    const double q = besov_continuous(f, d, kHalf).value / besov_dyadic(f, d, kHalf).value;
    EXPECT_GE(q, 0.5) << name;
    EXPECT_LE(q, 2.0) << name;
  }
}

TEST(Besov, CyclicShiftInvariance) {
  const std::size_t n = 96;
  const double h = 1.0 / 16;
  const auto s = ring(n, h);
  std::vector<double> f(n), g(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(2 * std::numbers::pi * 3 * i / n) + 0.3 * std::cos(i * 0.7);
  for (std::size_t i = 0; i < n; ++i) g[i] = f[(i + 17) % n];
  const auto grid = default_radius_grid(s, kHalf);
  EXPECT_NEAR(besov_dyadic(s, f, kHalf).power, besov_dyadic(s, g, kHalf).power, 1e-10);
  EXPECT_NEAR(besov_double_integral(s, f, kHalf).power, besov_double_integral(s, g, kHalf).power, 1e-10);
  EXPECT_NEAR(besov_continuous(s, f, kHalf, grid).power, besov_continuous(s, g, kHalf, grid).power, 1e-10);
}

TEST(Besov, RatioInvariantUnderNuScaling) {
  const std::size_t n = 64;
  const auto a = ring(n, 0.125), b = ring(n, 0.125, 3.7);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::abs(static_cast<double>(i) - 20.0) / 10.0;
  const double qa = besov_dyadic(a, f, kHalf).power / besov_double_integral(a, f, kHalf).power;
  const double qb = besov_dyadic(b, f, kHalf).power / besov_double_integral(b, f, kHalf).power;
  EXPECT_NEAR(qa, qb, 1e-12 * qa);
  EXPECT_NEAR(besov_dyadic(b, f, kHalf).power, 3.7 * besov_dyadic(a, f, kHalf).power,
              1e-12 * besov_dyadic(b, f, kHalf).power);
}
