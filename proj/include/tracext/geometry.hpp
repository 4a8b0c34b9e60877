#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace tracext {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Segment {
  Point2 a;
  Point2 b;

  double length() const { return dist(a, b); }
  Point2 at(double t) const { return a + (b - a) * t; }
};

inline double dist(Point2 p, const Segment& s) {
  const Point2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return dist(p, s.a);
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return dist(p, s.at(t));
}

// Parameter interval (t0, t1) ⊂ [0,1] on which the segment lies strictly inside the
// open ball B(c, r). Empty optional when the segment misses the ball.
inline std::optional<std::pair<double, double>> segment_in_ball(const Segment& s, Point2 c,
                                                                double r) {
  const Point2 d = s.b - s.a;
  const Point2 f = s.a - c;
  const double qa = dot(d, d);
  const double qb = 2.0 * dot(f, d);
  const double qc = dot(f, f) - r * r;
  if (qa == 0.0) {
    if (qc < 0.0) return std::pair{0.0, 1.0};
    return std::nullopt;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable roots.
  const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
  double t0 = q / qa;
  double t1 = (q != 0.0) ? qc / q : -t0;
  if (t0 > t1) std::swap(t0, t1);
  const double lo = std::max(t0, 0.0);
  const double hi = std::min(t1, 1.0);
  if (lo >= hi) return std::nullopt;
  return std::pair{lo, hi};
}

// Closed simple polygon containment (boundary counts as inside, tolerance eps).
inline bool polygon_contains(const std::vector<Point2>& poly, Point2 p, double eps = 1e-12) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (dist(p, Segment{poly[i], poly[(i + 1) % n]}) <= eps) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[i];
    const Point2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

}  // namespace tracext
