#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <tracext/cone_chain.hpp>
#include <tracext/families.hpp>
#include <tracext/trace_extension.hpp>

#include "common.hpp"
#include "oracle.hpp"

using namespace tracext;

namespace {

WhitneyCover anchored_cover(const Domain& d) {
  auto c = build_whitney(d);
  boundary_anchors(c, d);
  return c;
}

struct Fixture {
  Domain dom;
  WhitneyCover cover;
  PartitionOfUnity pou;
  explicit Fixture(Domain d) : dom(std::move(d)), cover(anchored_cover(dom)), pou(build_partition(cover, dom)) {}
};

ScalarField bfield(const Domain& d, double (*fn)(Point2)) { return make_field(d, Support::boundary, fn); }
ScalarField ifield(const Domain& d, double (*fn)(Point2)) { return make_field(d, Support::interior, fn); }

double tcos(Point2 p) { return std::cos(2 * std::numbers::pi * p.x); }

}  // namespace

TEST(Extension, ConstantsReproduced) {
  for (auto d : {make_halfplane(1.0 / 8), make_lshape(1.0 / 16), make_square(1.0 / 16)}) {
    Fixture s(std::move(d));
    const auto F = extend(constant_field(s.dom, Support::boundary, -1.75), s.cover, s.pou, s.dom);
    for (std::size_t x : s.dom.interior()) EXPECT_NEAR(F[x], -1.75, 1e-9);
    EXPECT_EQ(F.provenance, Provenance::extension);
  }
}

TEST(Extension, Linear) {
  Fixture s(make_halfplane(1.0 / 8));
  const auto f = bfield(s.dom, tcos);
  const auto g = bfield(s.dom, [](Point2 p) { return p.x * p.x; });
  const auto lhs = extend(linear_combination(2.0, f, -0.5, g), s.cover, s.pou, s.dom);
  const auto Ef = extend(f, s.cover, s.pou, s.dom), Eg = extend(g, s.cover, s.pou, s.dom);
  for (std::size_t x : s.dom.interior()) EXPECT_NEAR(lhs[x], 2.0 * Ef[x] - 0.5 * Eg[x], 1e-12);
}

TEST(Extension, IdentityBoundaryValues) {
  const double h = 1.0 / 16;
  Fixture s(make_halfplane(h));
  const auto F = extend(bfield(s.dom, [](Point2 p) { return p.x; }), s.cover, s.pou, s.dom);
  for (std::size_t x : s.dom.interior()) {
    const Point2 q = s.dom.space().point(x);
    if (q.x < 2 || q.x > 6 || q.y > 1) continue;
    EXPECT_LE(std::abs(F[x] - q.x), q.y + h) << q.x << "," << q.y;
  }
}

TEST(Extension, MatchesDirectComputation) {
  Fixture s(make_square(1.0 / 16));
  ASSERT_LE(s.dom.space().size(), 500u);
  const auto f = bfield(s.dom, [](Point2 p) { return std::sin(5 * p.x) + p.y * p.y - 0.3 * p.x * p.y; });
  const auto F = extend(f, s.cover, s.pou, s.dom);
  std::vector<Point2> ip, bp;
  std::vector<double> fb;
  for (std::size_t x : s.dom.interior()) ip.push_back(s.dom.space().point(x));
  for (std::size_t z : s.dom.boundary()) {
    bp.push_back(s.dom.space().point(z));
    fb.push_back(f[z]);
  }
  std::vector<oracle::RefBall> balls;
  for (const auto& b : s.cover.balls) balls.push_back({s.dom.space().point(b.center), b.radius});
  const auto ref = oracle::extend(ip, bp, s.dom.nu_weights(), fb, balls);
  for (std::size_t k = 0; k < ip.size(); ++k) EXPECT_NEAR(F[s.dom.interior()[k]], ref[k], 1e-10);
}

TEST(Extension, Errors) {
  Fixture s(make_square(1.0 / 8));
  EXPECT_THROW(extend(constant_field(s.dom, Support::interior, 1), s.cover, s.pou, s.dom), DataError);
  auto f = constant_field(s.dom, Support::boundary, 1);
  f.values[s.dom.boundary()[3]] = std::nan("");
  EXPECT_THROW(extend(f, s.cover, s.pou, s.dom), DataError);
  WhitneyCover bare = s.cover;
  bare.anchored = false;
  EXPECT_THROW(extend(constant_field(s.dom, Support::boundary, 1), bare, s.pou, s.dom), UsageError);
}

TEST(Trace, Constants) {
  const auto d = make_lshape(1.0 / 16);
  const auto t = trace(constant_field(d, Support::interior, 4.5), d, default_trace_params(d));
  EXPECT_EQ(t.missing, 0u);
  EXPECT_EQ(t.unconverged, 0u);
  for (std::size_t z : d.boundary()) EXPECT_NEAR(t.values[z], 4.5, 1e-12);
}

TEST(Trace, LinearTangential) {
  const double h = 1.0 / 16;
  const auto d = make_halfplane(h);
  const auto t = trace(ifield(d, [](Point2 p) { return p.x; }), d, default_trace_params(d));
  for (std::size_t z : d.boundary()) {
    const double x = d.space().point(z).x;
    EXPECT_NEAR(t.values[z], x, 2 * h);
    if (x > 1 && x < 7) {
      EXPECT_NEAR(t.values[z], x, 1e-12);
    }
  }
}

TEST(Trace, LinearNormalShrinksWithRadius) {
  std::vector<double> at;
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const auto d = make_halfplane(h);
    const auto t = trace(ifield(d, [](Point2 p) { return p.y; }), d, default_trace_params(d));
    const std::size_t z = site_at(d, 4, 0);
    EXPECT_GE(t.values[z], 0.3 * 2 * h);
    EXPECT_LE(t.values[z], 0.7 * 2 * h);
    at.push_back(t.values[z]);
  }
  EXPECT_NEAR(at[1] / at[0], 0.5, 0.1);
}

TEST(Trace, MissingSitesReported) {
  const auto d = make_square(1.0 / 8);
  TraceParams tp{{0.25}, 100, 0.05};
  const auto t = trace(constant_field(d, Support::interior, 1), d, tp);
  EXPECT_EQ(t.missing, d.boundary().size());
  for (std::size_t z : d.boundary()) {
    EXPECT_FALSE(t.has_value[z]);
    EXPECT_TRUE(std::isnan(t.values[z]));
  }
}

TEST(Trace, ScheduleErrors) {
  const auto d = make_square(1.0 / 8);
  const auto u = constant_field(d, Support::interior, 1);
  EXPECT_THROW(trace(u, d, TraceParams{{0.25, 0.5}, 3, 0.05}), UsageError);
  EXPECT_THROW(trace(u, d, TraceParams{{0.5, 0.2}, 3, 0.05}), UsageError);
  EXPECT_THROW(trace(u, d, TraceParams{{}, 3, 0.05}), UsageError);
  EXPECT_THROW(trace(constant_field(d, Support::boundary, 1), d, default_trace_params(d)), DataError);
}

TEST(Roundtrip, Constants) {
  Fixture s(make_lshape(1.0 / 16));
  const auto r = roundtrip_error(constant_field(s.dom, Support::boundary, 2), s.dom, s.cover, s.pou,
                                 default_trace_params(s.dom));
  EXPECT_LE(r.sup_err, 1e-9);
  EXPECT_EQ(r.compared, s.dom.boundary().size());
}

TEST(Roundtrip, ErrorDecreasesUnderRefinement) {
  std::vector<double> sup_t, lp_cos;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    Fixture s(make_halfplane(h));
    const auto tp = default_trace_params(s.dom);
    sup_t.push_back(roundtrip_error(bfield(s.dom, [](Point2 p) { return p.x; }), s.dom, s.cover, s.pou, tp).sup_err);
    lp_cos.push_back(roundtrip_error(bfield(s.dom, tcos), s.dom, s.cover, s.pou, tp).lp_err);
  }
  EXPECT_LE(sup_t[1], sup_t[0] / 1.5);
  EXPECT_LT(lp_cos[1], lp_cos[0]);
}

TEST(Roundtrip, ArgmaxStableUnderScaling) {
  Fixture s(make_halfplane(1.0 / 8));
  const auto f = bfield(s.dom, tcos);
  const auto tp = default_trace_params(s.dom);
  const auto a = roundtrip_error(f, s.dom, s.cover, s.pou, tp);
  const auto b = roundtrip_error(linear_combination(3.0, f, 0.0, f), s.dom, s.cover, s.pou, tp);
  EXPECT_EQ(a.argmax, b.argmax);
  EXPECT_NEAR(b.sup_err, 3.0 * a.sup_err, 1e-12);
}

namespace {

struct ChainCase {
  Domain dom;
  ScalarField u, lip;
  TraceResult tu;
  ChainCase(double h, double (*fn)(Point2))
      : dom(make_halfplane(h)), u(ifield(dom, fn)), lip(local_lip(u, dom, 2 * h)),
        tu(trace(u, dom, default_trace_params(dom))) {}
  ChainEstimate run(double x0, double x1, const ChainEstimateParams& cp = {}) const {
    const std::size_t a = site_at(dom, x0, 0), b = site_at(dom, x1, 0);
    const auto c = uniform_curve(dom, a, b);
    const auto ch = build_cone_chain(dom, c.curve, 1.0);
    return chain_oscillation_estimate(u, tu, lip, ch, a, b, dom, cp);
  }
};

}  // namespace

TEST(ChainEstimate, LinearAcrossUnitGap) {
  const double h = 1.0 / 32;
  ChainCase c(h, [](Point2 p) { return p.x; });
  // the window corner truncates the trace ball at the origin
  const auto corner = c.run(0, 1);
  EXPECT_NEAR(corner.lhs, 1.0, 2 * h);
  const auto mid = c.run(2, 3);
  EXPECT_NEAR(mid.lhs, 1.0, 1e-12);
  EXPECT_EQ(mid.epsilon, 0.5);
  EXPECT_TRUE(std::isfinite(mid.raw_rhs));
  EXPECT_GT(mid.raw_rhs, 0.0);
  const std::vector<ChainEstimate> ref{corner, mid, c.run(3, 5), c.run(1, 1.5)};
  const double C = calibrate_chain_constant(ref);
  for (const auto& e : ref) EXPECT_LE(e.lhs, C * e.raw_rhs);
}

TEST(ChainEstimate, ConstantGivesZero) {
  ChainCase c(1.0 / 16, [](Point2) { return 7.0; });
  const auto e = c.run(2, 4);
  EXPECT_EQ(e.lhs, 0.0);
  EXPECT_EQ(e.raw_rhs, 0.0);
  EXPECT_EQ(e.ratio(1.0), 0.0);
}

TEST(ChainEstimate, TelescopingIsExact) {
  ChainCase c(1.0 / 32, [](Point2 p) { return std::sin(3 * p.x) + p.y; });
  const auto e = c.run(2, 3.5);
  EXPECT_GT(e.sampled_balls, 2u);
  EXPECT_NEAR(e.telescoping_sum, e.end_difference, 1e-12);
}

TEST(ChainEstimate, PEqualsOneUsesRadiusWeights) {
  const double h = 1.0 / 16;
  ChainCase c(h, [](Point2 p) { return p.x; });
  // theta = 1 leaves no room for epsilon < 1 - theta
  EXPECT_THROW(c.run(2, 3, ChainEstimateParams{1.0, 0.1, 1.0}), UsageError);
}

TEST(ChainEstimate, ExponentErrors) {
  ChainCase c(1.0 / 16, [](Point2 p) { return p.x; });
  EXPECT_THROW(c.run(2, 3, ChainEstimateParams{2.0, 1.5, 1.0}), UsageError);
  EXPECT_THROW(c.run(2, 3, ChainEstimateParams{2.0, 0.0, 1.0}), UsageError);
  ConeChain far;
  far.balls.push_back(ChainBall{0, {100, 100}, 1.0, 0, 1, false});
  EXPECT_THROW(chain_oscillation_estimate(c.u, c.tu, c.lip, far, site_at(c.dom, 2, 0), site_at(c.dom, 3, 0),
                                          c.dom, {}),
               DataError);
}

TEST(Locality, ConstantsFinite) {
  Fixture s(make_halfplane(1.0 / 8));
  const auto f = bfield(s.dom, tcos);
  const auto F = extend(f, s.cover, s.pou, s.dom);
  const auto loc = measure_ball_locality(F, f, s.cover, s.dom, 2.0);
  EXPECT_GT(loc.evaluated, 0u);
  EXPECT_TRUE(std::isfinite(loc.constant));
  EXPECT_GT(loc.constant, 0.0);
  std::vector<std::size_t> centers{site_at(s.dom, 2, 0), site_at(s.dom, 4, 0)};
  const std::vector<double> radii{0.25, 0.5, 1.0};
  const auto lay = measure_layer_bound(F, f, s.dom, centers, radii, 2.0);
  EXPECT_EQ(lay.evaluated, 6u);
  EXPECT_TRUE(std::isfinite(lay.constant));
}

TEST(OperatorNorms, ScaleInvariantAndStable) {
  std::vector<double> KE;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    Fixture s(make_halfplane(h));
    const auto f = bfield(s.dom, tcos);
    const std::vector<std::pair<std::string, ScalarField>> fam{{"cos", f}, {"cos3", linear_combination(3.0, f, 0.0, f)}};
    const auto rep = extension_norm(s.dom, s.cover, s.pou, fam, {});
    ASSERT_EQ(rep.per_function.size(), 2u);
    EXPECT_NEAR(rep.per_function[0].ratio, rep.per_function[1].ratio, 1e-10);
    KE.push_back(rep.K);
  }
  EXPECT_LT(std::max(KE[0] / KE[1], KE[1] / KE[0]), 2.0);
}

TEST(OperatorNorms, TraceNormFinite) {
  const auto d = make_halfplane(1.0 / 8);
  const auto fam = sample_family(d, Support::interior, interior_family(bounding_box(d), {}));
  const auto rep = trace_norm(d, fam, {});
  EXPECT_EQ(rep.per_function.size(), fam.size());
  EXPECT_TRUE(std::isfinite(rep.K));
  EXPECT_GT(rep.K, 0.0);
}

TEST(OperatorNorms, ExponentMismatch) {
  Fixture s(make_halfplane(1.0 / 8));
  const std::vector<std::pair<std::string, ScalarField>> fam{{"cos", bfield(s.dom, tcos)}};
  OperatorNormParams op;
  op.alpha = 0.4;
  EXPECT_THROW(extension_norm(s.dom, s.cover, s.pou, fam, op), UsageError);
  const std::vector<std::pair<std::string, ScalarField>> zero{{"c", constant_field(s.dom, Support::boundary, 1)}};
  EXPECT_THROW(extension_norm(s.dom, s.cover, s.pou, zero, {}), DataError);
}
