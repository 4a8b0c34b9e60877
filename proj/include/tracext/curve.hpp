#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "geometry.hpp"

namespace tracext {

// Arclength-parameterised polyline gamma: [0, L] -> closed window with gamma(0) = xi and
// gamma(L) = zeta.
class Curve {
 public:
  Curve() = default;
  explicit Curve(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 2) throw UsageError("a curve needs at least two vertices");
    cumulative_.assign(vertices_.size(), 0.0);
    for (std::size_t k = 1; k < vertices_.size(); ++k)
      cumulative_[k] = cumulative_[k - 1] + dist(vertices_[k - 1], vertices_[k]);
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t segment_count() const { return vertices_.size() - 1; }
  Segment segment(std::size_t k) const { return {vertices_[k], vertices_[k + 1]}; }
  double segment_start(std::size_t k) const { return cumulative_[k]; }
  double length() const { return cumulative_.back(); }
  Point2 front() const { return vertices_.front(); }
  Point2 back() const { return vertices_.back(); }

  Point2 at(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - cumulative_.begin() - 1));
    k = std::min(k, segment_count() - 1);
    const double len = cumulative_[k + 1] - cumulative_[k];
    const double t = len > 0.0 ? (s - cumulative_[k]) / len : 0.0;
    return segment(k).at(std::clamp(t, 0.0, 1.0));
  }

  // Points at arclength s along the curve: every vertex plus `per_segment` interior samples
  // of each segment.
  std::vector<double> sample_parameters(std::size_t per_segment) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < segment_count(); ++k) {
      const double a = cumulative_[k], b = cumulative_[k + 1];
      for (std::size_t j = 0; j <= per_segment; ++j)
        out.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(per_segment + 1));
    }
    out.push_back(length());
    return out;
  }

 private:
  std::vector<Point2> vertices_;
  std::vector<double> cumulative_;
};

struct UniformityReport {
  double length_ratio = 0.0;  // l(gamma) / d(xi, zeta)
  double cigar_ratio = 0.0;   // max_z min(l(gamma_xz), l(gamma_zy)) / d_Omega(z)
  double measured_a = 0.0;    // max of both
  bool inside = true;         // every sample in the closed window, open arc off the boundary
};

// Checks uniformity (i)-(ii) at every vertex and at `per_segment` samples per segment.
inline UniformityReport measure_uniformity(const Curve& c, const Domain& dom,
                                           std::size_t per_segment = 64) {
  UniformityReport rep;
  const double chord = dist(c.front(), c.back());
  rep.length_ratio = chord > 0.0 ? c.length() / chord : std::numeric_limits<double>::infinity();
  const double L = c.length();
  for (double s : c.sample_parameters(per_segment)) {
    const Point2 z = c.at(s);
    if (!dom.contains(z, 1e-12 * std::max(1.0, L))) rep.inside = false;
    const double near_end = std::min(s, L - s);
    if (near_end <= 0.0) continue;
    const double dz = dom.distance_to_boundary(z);
    if (!(dz > 0.0)) {
      rep.inside = false;
      rep.cigar_ratio = std::numeric_limits<double>::infinity();
      continue;
    }
    rep.cigar_ratio = std::max(rep.cigar_ratio, near_end / dz);
  }
  rep.measured_a = std::max(rep.length_ratio, rep.cigar_ratio);
  return rep;
}

namespace detail {

inline std::vector<std::vector<Point2>> hub_routes(const Domain& dom) {
  const std::string& p = dom.window().preset;
  if (p == "square") return {{{0.5, 0.5}}};
  if (p == "lshape") {
    const Point2 corner{0.5, 0.5}, right{1.5, 0.5}, top{0.5, 1.5};
    return {{corner}, {right}, {top}, {right, corner}, {corner, right}, {top, corner},
            {corner, top}, {right, corner, top}, {top, corner, right}};
  }
  return {};
}

}  // namespace detail

struct CurveChoice {
  Curve curve;
  UniformityReport uniformity;
  std::string kind;  // "tent", "chord", "hub"
};

// Explicit polyline between two true-boundary sites. Candidates are the tent
// xi -> midpoint + (|xi - zeta|/2) n -> zeta for both chord normals n, the straight chord,
// and routes through preset hub points; the admissible candidate with the smallest
// measured uniformity constant wins (tents first on ties).
inline CurveChoice uniform_curve(const Domain& dom, std::size_t xi, std::size_t zeta) {
  if (!dom.space().has_coordinates() || !dom.window().has_geometry())
    throw UsageError("uniform_curve needs a planar preset domain");
  if (xi == zeta) throw UsageError("curve endpoints coincide");
  if (!dom.is_boundary(xi) || !dom.is_boundary(zeta))
    throw UsageError("curve endpoints must be true-boundary sites");
  const Point2 a = dom.space().point(xi);
  const Point2 b = dom.space().point(zeta);
  const double d = dist(a, b);
  if (!(d > 0.0)) throw UsageError("curve endpoints coincide");
  const Point2 mid = (a + b) * 0.5;
  const Point2 n{-(b.y - a.y) / d, (b.x - a.x) / d};

  std::vector<std::pair<std::string, std::vector<Point2>>> candidates;
  candidates.push_back({"tent", {a, mid + n * (0.5 * d), b}});
  candidates.push_back({"tent", {a, mid - n * (0.5 * d), b}});
  candidates.push_back({"chord", {a, b}});
  for (const auto& hubs : detail::hub_routes(dom)) {
    std::vector<Point2> v{a};
    v.insert(v.end(), hubs.begin(), hubs.end());
    v.push_back(b);
    candidates.push_back({"hub", std::move(v)});
  }

  std::optional<CurveChoice> best;
  for (auto& [kind, verts] : candidates) {
    Curve c(verts);
    const UniformityReport u = measure_uniformity(c, dom);
    if (!u.inside || !std::isfinite(u.measured_a)) continue;
    if (!best || u.measured_a < best->uniformity.measured_a * (1.0 - 1e-12))
      best = CurveChoice{std::move(c), u, kind};
  }
  if (!best) throw UsageError("no admissible preset curve between the given boundary sites");
  return *best;
}

}  // namespace tracext
