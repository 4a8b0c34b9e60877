#include <gtest/gtest.h>

#include <cmath>

#include <tracext/families.hpp>
#include <tracext/gradient.hpp>

using namespace tracext;

namespace {
ScalarField field(const Domain& d, double (*fn)(Point2)) { return make_field(d, Support::interior, fn); }
}  // namespace

TEST(Lip, ConstantIsZero) {
  const auto d = make_square(1.0 / 16);
  const auto g = local_lip(constant_field(d, Support::interior, 2.0), d, 2.0 / 16);
  for (std::size_t s : d.interior()) EXPECT_EQ(g[s], 0.0);
  EXPECT_EQ(g.provenance, Provenance::gradient_surrogate);
}

TEST(Lip, LinearIsOne) {
  const auto d = make_square(1.0 / 16);
  const auto g = local_lip(field(d, [](Point2 p) { return p.x; }), d, 2.0 / 16);
  for (std::size_t s : d.interior()) EXPECT_NEAR(g[s], 1.0, 1e-12);
}

TEST(Lip, QuadraticNearDerivative) {
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const auto d = make_square(h);
    const auto g = local_lip(field(d, [](Point2 p) { return p.x * p.x; }), d, 2 * h);
    for (std::size_t s : d.interior()) EXPECT_NEAR(g[s], 2 * d.space().point(s).x, 2.0 * h + 1e-12);
  }
}

TEST(Lip, RadiusBelowTwoH) {
  const auto d = make_square(1.0 / 8);
  EXPECT_THROW(local_lip(constant_field(d, Support::interior, 0), d, 0.2), UsageError);
}

TEST(Lip, Sublinear) {
  const auto d = make_halfplane(1.0 / 8);
  const auto fam = sample_family(d, Support::interior, interior_family(bounding_box(d), {}));
  for (std::size_t a = 0; a + 1 < fam.size(); ++a) {
    const auto& u = fam[a].second;
    const auto& v = fam[a + 1].second;
    const auto lu = local_lip(u, d, 0.25), lv = local_lip(v, d, 0.25);
    const auto luv = local_lip(linear_combination(1, u, 1, v), d, 0.25);
    for (std::size_t s : d.interior()) EXPECT_LE(luv[s], lu[s] + lv[s] + 1e-12);
  }
}

TEST(Energy, LinearOnUnitSquare) {
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const auto d = make_square(h);
    const auto g = local_lip(field(d, [](Point2 p) { return p.x; }), d, 2 * h);
    EXPECT_NEAR(dirichlet_energy(g, d, 2.0), 1.0, 2 * h);
  }
}

TEST(Energy, Homogeneous) {
  const auto d = make_square(1.0 / 16);
  const auto u = field(d, [](Point2 p) { return std::sin(3 * p.x) * p.y; });
  const auto v = linear_combination(-3.5, u, 0.0, u);
  const double eu = dirichlet_energy(local_lip(u, d, 0.125), d, 2);
  const double ev = dirichlet_energy(local_lip(v, d, 0.125), d, 2);
  EXPECT_NEAR(ev, 3.5 * eu, 1e-12);
  EXPECT_EQ(dirichlet_energy(local_lip(constant_field(d, Support::interior, 1), d, 0.125), d, 2), 0.0);
}

TEST(Energy, FieldMismatch) {
  const auto a = make_square(1.0 / 8), b = make_square(1.0 / 16);
  EXPECT_THROW(dirichlet_energy(constant_field(a, Support::interior, 0), b, 2), DataError);
}

TEST(Poincare, LinearRatioIsMeanDeviation) {
  const double h = 1.0 / 32;
  const auto d = make_square(h);
  const auto u = field(d, [](Point2 p) { return p.x; });
  const auto g = local_lip(u, d, 2 * h);
  for (double r : {0.1, 0.2, 0.3}) {
    const std::vector<Ball> balls{{{0.5, 0.5}, r}};
    const auto rep = check_poincare(d, u, g, 2.0, 1.0, balls);
    ASSERT_EQ(rep.evaluated, 1u);
    double m = 0, s = 0;
    const auto in = d.interior_ball(Point2{0.5, 0.5}, r);
    for (std::size_t x : in) {
      m += d.space().weight(x);
      s += d.space().weight(x) * d.space().point(x).x;
    }
    double dev = 0;
    for (std::size_t x : in) dev += d.space().weight(x) * std::abs(d.space().point(x).x - s / m);
    EXPECT_NEAR(rep.worst_ratio, dev / m / r, 1e-12);
    EXPECT_LE(rep.worst_ratio, 1.0);
  }
}

TEST(Poincare, LocallyConstantSkipped) {
  const auto d = make_square(1.0 / 16);
  const auto u = field(d, [](Point2 p) { return p.x < 0.5 ? 0.0 : p.x - 0.5; });
  const auto g = local_lip(u, d, 0.125);
  const std::vector<Ball> balls{{{0.2, 0.5}, 0.1}};
  const auto rep = check_poincare(d, u, g, 2.0, 1.0, balls);
  EXPECT_EQ(rep.skipped, 1u);
  EXPECT_EQ(rep.evaluated, 0u);
}

TEST(Poincare, StableUnderRefinement) {
  double prev = 0;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const auto d = make_halfplane(h);
    std::vector<Ball> balls;
    for (double x = 1.5; x <= 6.5; x += 1.0)
      for (double r : {0.5, 0.75}) balls.push_back({{x, 2.0}, r});
    double worst = 0;
    for (const auto& [name, u] : sample_family(d, Support::interior, interior_family(bounding_box(d), {})))
      worst = std::max(worst, check_poincare(d, u, local_lip(u, d, 2 * h), 2.0, 2.0, balls).worst_ratio);
    EXPECT_GT(worst, 0.0);
    if (prev > 0) {
      EXPECT_LT(std::abs(worst - prev) / prev, 0.2);
    }
    prev = worst;
  }
}
