#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "space.hpp"

namespace tracext {

enum class SiteRole : std::uint8_t { interior, boundary };

// Geometry of the sampled region. `polygon` is the closed outline of the sampled window,
// `true_boundary` the segments that belong to the boundary proper. Window edges that
// only truncate an unbounded region are not listed there.
struct Window {
  std::string preset;  // "halfplane", "square", "lshape", or empty for custom data
  double h = 0.0;
  std::vector<Point2> polygon;
  std::vector<Segment> true_boundary;

  bool has_geometry() const { return !polygon.empty(); }
};

// Discrete (Omega, dOmega, mu, nu, theta). mu lives in the space weights (zero on
// boundary sites); nu is carried per boundary site and is zero on the interior.
class Domain {
 public:
  Domain() = default;

  static Domain from_parts(SampledSpace space, std::vector<std::size_t> boundary,
                           std::vector<double> nu, std::vector<std::size_t> artificial,
                           double theta, double uniformity, Window window) {
    if (!(theta > 0.0)) throw UsageError("theta must be positive");
    if (!(uniformity >= 1.0)) throw DataError("uniformity constant A must be >= 1");
    if (boundary.size() != nu.size()) throw DataError("nu_weights length does not match boundary");
    Domain d;
    const std::size_t n = space.size();
    d.role_.assign(n, SiteRole::interior);
    d.boundary_pos_.assign(n, npos);
    std::vector<std::size_t> order(boundary.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return boundary[a] < boundary[b]; });
    for (std::size_t k : order) {
      const std::size_t s = boundary[k];
      if (s >= n) throw DataError("boundary index out of range");
      if (d.role_[s] == SiteRole::boundary) throw DataError("duplicate boundary index");
      if (!(nu[k] > 0.0) || !std::isfinite(nu[k])) throw DataError("boundary nu weight must be positive");
      if (space.weight(s) != 0.0) throw DataError("boundary sites must carry zero mu weight");
      d.role_[s] = SiteRole::boundary;
      d.boundary_pos_[s] = d.boundary_.size();
      d.boundary_.push_back(s);
      d.nu_.push_back(nu[k]);
    }
    if (d.boundary_.empty()) throw DataError("domain has no boundary sites");
    for (std::size_t s = 0; s < n; ++s) {
      if (d.role_[s] != SiteRole::interior) continue;
      if (!(space.weight(s) > 0.0)) throw DataError("interior sites must carry positive mu weight");
      d.interior_.push_back(s);
    }
    d.artificial_flag_.assign(n, false);
    for (std::size_t s : artificial) {
      if (s >= n || d.role_[s] != SiteRole::interior)
        throw DataError("artificial sites must be interior sites");
      d.artificial_flag_[s] = true;
    }
    std::sort(artificial.begin(), artificial.end());
    artificial.erase(std::unique(artificial.begin(), artificial.end()), artificial.end());
    d.artificial_ = std::move(artificial);
    d.theta_ = theta;
    d.uniformity_ = uniformity;
    d.window_ = std::move(window);
    d.space_ = std::move(space);
    if (!(d.window_.h > 0.0)) d.window_.h = d.space_.min_spacing();
    d.boundary_space_ = d.space_.subspace(d.boundary_, d.nu_);

    d.d_omega_.assign(n, 0.0);
    for (std::size_t s : d.interior_) {
      d.d_omega_[s] = d.window_.true_boundary.empty() || !d.space_.has_coordinates()
                          ? d.sampled_distance_to_boundary(s)
                          : d.distance_to_boundary(d.space_.point(s));
      if (!(d.d_omega_[s] > 0.0)) throw DataError("interior site at zero distance from the boundary");
    }
    return d;
  }

  const SampledSpace& space() const { return space_; }
  const SampledSpace& boundary_space() const { return boundary_space_; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary() const { return boundary_; }
  const std::vector<std::size_t>& artificial() const { return artificial_; }
  const std::vector<double>& nu_weights() const { return nu_; }
  double theta() const { return theta_; }
  double uniformity() const { return uniformity_; }
  const Window& window() const { return window_; }
  double resolution() const { return window_.h; }

  SiteRole role(std::size_t s) const { return role_.at(s); }
  bool is_interior(std::size_t s) const { return role_[s] == SiteRole::interior; }
  bool is_boundary(std::size_t s) const { return role_[s] == SiteRole::boundary; }
  bool is_artificial(std::size_t s) const { return artificial_flag_[s]; }

  // Position of a boundary site in boundary() / boundary_space(); npos for interior sites.
  std::size_t boundary_position(std::size_t s) const { return boundary_pos_.at(s); }
  double nu(std::size_t s) const {
    const std::size_t k = boundary_position(s);
    return k == npos ? 0.0 : nu_[k];
  }

  // d_Omega at an interior site (continuum distance when boundary segments are known).
  double distance_to_boundary(std::size_t s) const {
    if (s >= role_.size()) throw UsageError("site index out of range");
    if (role_[s] != SiteRole::interior)
      throw UsageError("distance_to_boundary expects an interior site");
    return d_omega_[s];
  }

  // d_Omega at a free point of the model geometry.
  double distance_to_boundary(Point2 p) const {
    double best = std::numeric_limits<double>::infinity();
    if (!window_.true_boundary.empty()) {
      for (const auto& seg : window_.true_boundary) best = std::min(best, dist(p, seg));
      return best;
    }
    for (std::size_t b : boundary_) best = std::min(best, space_.distance(p, b));
    return best;
  }

  // Brute-force minimum over the boundary samples.
  double sampled_distance_to_boundary(std::size_t s) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b : boundary_) best = std::min(best, space_.distance(s, b));
    return best;
  }

  // Nearest true-boundary site; ties go to the smallest site index.
  std::size_t nearest_boundary_site(std::size_t s) const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = boundary_.front();
    for (std::size_t b : boundary_) {
      const double d = space_.distance(s, b);
      if (d < best) {
        best = d;
        arg = b;
      }
    }
    return arg;
  }

  // Closed-window membership of a free point.
  bool contains(Point2 p, double eps = 1e-12) const {
    if (!window_.has_geometry()) throw UsageError("domain has no planar window geometry");
    return polygon_contains(window_.polygon, p, eps);
  }

  // mu(B(c, r) ∩ Omega): boundary sites carry zero mu, so this is the plain ball mass.
  double interior_mass(Point2 c, double r) const { return space_.ball_mass(c, r); }
  double interior_mass(std::size_t c, double r) const { return space_.ball_mass(c, r); }

  // nu(B(c, r) ∩ dOmega).
  double boundary_mass(std::size_t c, double r) const {
    double m = 0.0;
    for_each_boundary_in_ball(c, r, [&](std::size_t b, double) { m += nu(b); });
    return m;
  }

  // fn(site, distance) for true-boundary sites in B(center, r), ascending site order.
  template <class Fn>
  void for_each_boundary_in_ball(std::size_t center, double r, Fn&& fn) const {
    std::vector<std::pair<std::size_t, double>> hits;
    space_.for_each_in_ball(center, r, [&](std::size_t i, double d) {
      if (role_[i] == SiteRole::boundary) hits.emplace_back(i, d);
    });
    std::sort(hits.begin(), hits.end());
    for (auto [i, d] : hits) fn(i, d);
  }

  std::vector<std::size_t> boundary_ball(std::size_t center, double r) const {
    std::vector<std::size_t> out;
    for_each_boundary_in_ball(center, r, [&](std::size_t b, double) { out.push_back(b); });
    return out;
  }

  std::vector<std::size_t> interior_ball(Point2 c, double r) const {
    std::vector<std::size_t> out;
    space_.for_each_in_ball(c, r, [&](std::size_t i, double) {
      if (role_[i] == SiteRole::interior) out.push_back(i);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::size_t> interior_ball(std::size_t c, double r) const {
    std::vector<std::size_t> out;
    space_.for_each_in_ball(c, r, [&](std::size_t i, double) {
      if (role_[i] == SiteRole::interior) out.push_back(i);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  SampledSpace space_;
  SampledSpace boundary_space_;
  std::vector<SiteRole> role_;
  std::vector<std::size_t> boundary_pos_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> artificial_;
  std::vector<bool> artificial_flag_;
  std::vector<double> nu_;
  std::vector<double> d_omega_;
  double theta_ = 1.0;
  double uniformity_ = 1.0;
  Window window_;
};

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline long grid_steps(double length, double h, const char* what) {
  const double q = length / h;
  const long n = std::lround(q);
  if (n < 1 || std::abs(q - static_cast<double>(n)) > 1e-9 * std::max(1.0, q))
    throw UsageError(std::string("resolution h must divide the ") + what);
  return n;
}

inline bool on_segments(Point2 p, const std::vector<Segment>& segs, double tol) {
  for (const auto& s : segs)
    if (dist(p, s) <= tol) return true;
  return false;
}

}  // namespace detail

// Half-plane y > 0 seen through the window [0,8] x [0,4]; the y = 0 edge is the boundary,
// the other three window edges are artificial.
inline Domain make_halfplane(double h, double theta = 1.0) {
  if (!(h > 0.0)) throw UsageError("resolution h must be positive");
  const double width = 8.0, height = 4.0;
  const long nx = detail::grid_steps(width, h, "window width");
  const long ny = detail::grid_steps(height, h, "window height");
  std::vector<Point2> pts;
  std::vector<double> mu;
  std::vector<std::size_t> boundary, artificial;
  std::vector<double> nu;
  pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const std::size_t id = pts.size();
      pts.push_back({static_cast<double>(i) * h, static_cast<double>(j) * h});
      const double fx = (i == 0 || i == nx) ? 0.5 : 1.0;
      if (j == 0) {
        mu.push_back(0.0);
        boundary.push_back(id);
        nu.push_back(h * fx);
        continue;
      }
      const double fy = (j == ny) ? 0.5 : 1.0;
      mu.push_back(h * h * fx * fy);
      if (i == 0 || i == nx || j == ny) artificial.push_back(id);
    }
  }
  Window w;
  w.preset = "halfplane";
  w.h = h;
  w.polygon = {{0, 0}, {width, 0}, {width, height}, {0, height}};
  w.true_boundary = {{{0, 0}, {width, 0}}};
  return Domain::from_parts(SampledSpace::euclidean(std::move(pts), std::move(mu)),
                            std::move(boundary), std::move(nu), std::move(artificial), theta,
                            std::numbers::sqrt2, std::move(w));
}

namespace detail {

// Grid sites of a closed polygon whose edges are axis-aligned multiples of h. Sites on
// the outline are boundary sites with arclength (trapezoid) nu weights.
inline Domain polygon_grid_domain(std::string preset, std::vector<Point2> poly, double xmax,
                                  double ymax, double h, double theta, double uniformity) {
  const long nx = grid_steps(xmax, h, "domain width");
  const long ny = grid_steps(ymax, h, "domain height");
  std::vector<Segment> segs;
  for (std::size_t k = 0; k < poly.size(); ++k) segs.push_back({poly[k], poly[(k + 1) % poly.size()]});
  const double tol = 1e-9 * h;
  std::vector<Point2> pts;
  std::vector<double> mu;
  std::vector<std::size_t> boundary;
  std::vector<double> nu;
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const Point2 p{static_cast<double>(i) * h, static_cast<double>(j) * h};
      if (!polygon_contains(poly, p, tol)) continue;
      const std::size_t id = pts.size();
      pts.push_back(p);
      if (on_segments(p, segs, tol)) {
        mu.push_back(0.0);
        boundary.push_back(id);
        // Both outline neighbours sit at distance h along a closed outline.
        nu.push_back(h);
      } else {
        mu.push_back(h * h);
      }
    }
  }
  Window w;
  w.preset = std::move(preset);
  w.h = h;
  w.polygon = std::move(poly);
  w.true_boundary = std::move(segs);
  return Domain::from_parts(SampledSpace::euclidean(std::move(pts), std::move(mu)),
                            std::move(boundary), std::move(nu), {}, theta, uniformity,
                            std::move(w));
}

}  // namespace detail

inline Domain make_square(double h, double theta = 1.0) {
  if (!(h > 0.0)) throw UsageError("resolution h must be positive");
  return detail::polygon_grid_domain("square", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 1.0, 1.0, h,
                                     theta, 2.0);
}

// [0,2]^2 with the open upper-right quadrant (1,2]x(1,2] removed.
inline Domain make_lshape(double h, double theta = 1.0) {
  if (!(h > 0.0)) throw UsageError("resolution h must be positive");
  detail::grid_steps(1.0, h, "arm width");
  return detail::polygon_grid_domain("lshape", {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}},
                                     2.0, 2.0, h, theta, 4.0);
}

inline Domain build_domain(const std::string& preset, double h, double theta = 1.0) {
  if (!(theta > 0.0)) throw UsageError("theta must be positive");
  if (preset == "halfplane" || preset == "halfplane-window") return make_halfplane(h, theta);
  if (preset == "square") return make_square(h, theta);
  if (preset == "lshape") return make_lshape(h, theta);
  throw UsageError("unknown preset '" + preset + "'");
}

// ---------------------------------------------------------------------------
// Codimension audit

struct CodimSample {
  std::size_t center = 0;
  double radius = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  double ratio = 0.0;  // mu(B ∩ Omega) / (r^theta nu(B ∩ dOmega))
};

struct CodimReport {
  std::vector<CodimSample> samples;
  std::vector<CodimSample> skipped;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double constant = 0.0;  // max(max_ratio, 1/min_ratio)
};

inline CodimReport check_codimension(const Domain& dom, std::span<const std::size_t> centers,
                                     std::span<const double> radii) {
  const double h = dom.resolution();
  for (double r : radii)
    if (!(r >= 4.0 * h * (1.0 - 1e-12)))
      throw UsageError("codimension radii must be at least 4h");
  CodimReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t z : centers) {
    if (!dom.is_boundary(z)) throw UsageError("codimension centers must be boundary sites");
    for (double r : radii) {
      CodimSample s{z, r, dom.interior_mass(z, r), dom.boundary_mass(z, r), 0.0};
      if (!(s.nu > 0.0) || !(s.mu > 0.0)) {
        rep.skipped.push_back(s);
        continue;
      }
      s.ratio = s.mu / (std::pow(r, dom.theta()) * s.nu);
      rep.min_ratio = std::min(rep.min_ratio, s.ratio);
      rep.max_ratio = std::max(rep.max_ratio, s.ratio);
      rep.samples.push_back(s);
    }
  }
  if (rep.samples.empty()) {
    rep.min_ratio = 0.0;
    rep.constant = std::numeric_limits<double>::infinity();
  } else {
    rep.constant = std::max({1.0, rep.max_ratio, 1.0 / rep.min_ratio});
  }
  return rep;
}

// Radii 4h, 4h*sqrt2, ... up to r_max (inclusive).
inline std::vector<double> codim_radii(const Domain& dom, double r_max) {
  std::vector<double> out;
  // Even steps are exact powers of two times 4h so ball boundaries fall on grid distances.
  for (int k = 0;; ++k) {
    const double r = std::ldexp(4.0 * dom.resolution(), k / 2) * (k % 2 ? std::numbers::sqrt2 : 1.0);
    if (r > r_max * (1 + 1e-12)) break;
    out.push_back(r);
  }
  if (out.empty() || out.back() < r_max * (1 - 1e-12)) out.push_back(r_max);
  return out;
}

// Boundary sites whose r_max-ball stays clear of artificial window edges, every
// `stride`-th one.
inline std::vector<std::size_t> codim_centers(const Domain& dom, double r_max, std::size_t stride = 1) {
  std::vector<std::size_t> out;
  std::size_t k = 0;
  for (std::size_t b : dom.boundary()) {
    bool clear = true;
    for (std::size_t a : dom.artificial())
      if (dom.space().distance(a, b) < r_max) {
        clear = false;
        break;
      }
    if (clear && (k++ % stride == 0)) out.push_back(b);
  }
  return out;
}

}  // namespace tracext
