#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <vector>

#include "curve.hpp"
#include "domain.hpp"
#include "error.hpp"
#include "geometry.hpp"

namespace tracext {

struct ChainBall {
  int k = 0;
  Point2 center;
  double radius = 0.0;
  double arclength = 0.0;  // curve parameter of the center
  double d_omega = 0.0;
  bool reset = false;  // radius re-chosen as d_Omega / (16 tau)
};

// Two-sided chain B_k along a curve from xi (k > 0 side) to zeta (k < 0 side), truncated
// below the resolution cutoff. Balls are stored in ascending k.
struct ConeChain {
  double tau = 1.0;
  double cutoff = 0.0;
  Curve curve;
  Point2 xi, zeta, x0;
  double d0 = 0.0;  // d_Omega(x0)
  std::vector<ChainBall> balls;

  bool empty() const { return balls.empty(); }
  int k_min() const { return balls.empty() ? 0 : balls.front().k; }
  int k_max() const { return balls.empty() ? 0 : balls.back().k; }
  const ChainBall& at(int k) const { return balls.at(static_cast<std::size_t>(k - k_min())); }
};

namespace detail {

// Open parameter intervals of gamma restricted to [lo, hi] lying inside the ball.
inline void curve_ball_intervals(const Curve& c, Point2 center, double r, double lo, double hi,
                                 std::vector<std::pair<double, double>>& out) {
  for (std::size_t k = 0; k < c.segment_count(); ++k) {
    const double s0 = c.segment_start(k);
    const double len = c.segment(k).length();
    if (len <= 0.0 || s0 + len < lo || s0 > hi) continue;
    const auto hit = segment_in_ball(c.segment(k), center, r);
    if (!hit) continue;
    const double a = std::max(lo, s0 + hit->first * len);
    const double b = std::min(hi, s0 + hit->second * len);
    if (a < b) out.emplace_back(a, b);
  }
}

// Walks outward from s_start through overlapping intervals; returns the far end of the
// connected component containing s_start in the given direction (-1 toward lo). Endpoints
// count as inside: per-segment pieces of one ball meet at curve vertices that lie in the ball.
inline double component_end(const std::vector<std::pair<double, double>>& iv, double s_start,
                            int direction) {
  double edge = s_start;
  bool moved = true;
  while (moved) {
    moved = false;
    for (auto [a, b] : iv) {
      if (a <= edge && edge <= b) {
        const double next = direction < 0 ? a : b;
        if ((direction < 0 && next < edge) || (direction > 0 && next > edge)) {
          edge = next;
          moved = true;
        }
      }
    }
  }
  return edge;
}

}  // namespace detail

inline ConeChain build_cone_chain(const Domain& dom, const Curve& curve, double tau,
                                  double cutoff = -1.0) {
  if (!(tau >= 1.0)) throw UsageError("chain dilation tau must be >= 1");
  if (cutoff < 0.0) cutoff = 0.5 * dom.resolution();
  for (double s : curve.sample_parameters(32))
    if (!dom.contains(curve.at(s), 1e-12 * std::max(1.0, curve.length())))
      throw UsageError("curve leaves the closed window");

  ConeChain ch;
  ch.tau = tau;
  ch.cutoff = cutoff;
  ch.curve = curve;
  ch.xi = curve.front();
  ch.zeta = curve.back();
  const double L = curve.length();
  const double s_mid = 0.5 * L;
  ch.x0 = curve.at(s_mid);
  ch.d0 = dom.distance_to_boundary(ch.x0);
  const double r0 = ch.d0 / (16.0 * tau);
  if (r0 < cutoff) return ch;

  const ChainBall b0{0, ch.x0, r0, s_mid, ch.d0, true};
  std::vector<ChainBall> positive{b0}, negative;

  // direction -1 walks toward xi (k > 0), +1 toward zeta (k < 0).
  for (int direction : {-1, +1}) {
    const double lo = direction < 0 ? 0.0 : s_mid;
    const double hi = direction < 0 ? s_mid : L;
    std::vector<ChainBall> side{b0};
    std::vector<std::pair<double, double>> intervals;
    detail::curve_ball_intervals(curve, b0.center, b0.radius, lo, hi, intervals);
    for (int step = 1; step < 1000000; ++step) {
      const ChainBall& last = side.back();
      const double s_next = detail::component_end(intervals, last.arclength, direction);
      if ((direction < 0 && s_next <= lo) || (direction > 0 && s_next >= hi)) break;
      if (s_next == last.arclength) break;  // no progress
      const Point2 x = curve.at(s_next);
      const double dx = dom.distance_to_boundary(x);
      const bool keep = dx >= 8.0 * tau * last.radius;
      const double r = keep ? last.radius : dx / (16.0 * tau);
      if (r < cutoff || !(r > 0.0)) break;
      side.push_back({direction < 0 ? step : -step, x, r, s_next, dx, !keep});
      detail::curve_ball_intervals(curve, x, r, lo, hi, intervals);
    }
    if (direction < 0)
      positive = std::move(side);
    else
      negative.assign(side.begin() + 1, side.end());
  }

  std::reverse(negative.begin(), negative.end());
  ch.balls = std::move(negative);
  ch.balls.insert(ch.balls.end(), positive.begin(), positive.end());
  return ch;
}

struct ChainStep {
  int k = 0;
  double radius = 0.0;
  double d_omega = 0.0;
  bool rad_dom_ok = false;        // d_Omega(x_k) >= 8 tau r_k
  double envelope_ratio = 0.0;    // r_k 2^{|k|} / d_Omega(x0)
  double distance_ratio = 0.0;    // d_Omega(x_k) / r_k
  bool meets_previous = true;     // B_k ∩ B_{k∓1} nonempty (toward k = 0)
};

struct ChainReport {
  std::vector<ChainStep> steps;
  double k_envelope = 0.0;  // smallest K with K^-1 2^-|k| d0 <= r_k <= K 2^-|k| d0
  double k_distance = 0.0;  // max d_Omega(x_k) / r_k
  double k_measured = 0.0;  // max of the two
  int n0 = 0;               // max |k - j| over intersecting enlarged balls
  int overlap_max = 0;      // max pointwise count of enlarged balls 4 tau B_k
  int decay_window = 0;     // ceil(16 tau A)
  bool decay_ok = true;     // r_{k + window} < r_k wherever both exist on one side
  double x0_ratio = 0.0;    // d_Omega(x0) / d(xi, zeta)
  bool rad_dom_ok = true;
  bool consecutive_ok = true;
  bool ok() const { return rad_dom_ok && consecutive_ok && decay_ok; }
};

inline ChainReport verify_chain_properties(const ConeChain& ch, const Domain& dom) {
  ChainReport rep;
  const double tau = ch.tau;
  const double span = dist(ch.xi, ch.zeta);
  rep.x0_ratio = span > 0.0 ? ch.d0 / span : 0.0;
  rep.decay_window = static_cast<int>(std::ceil(16.0 * tau * dom.uniformity() - 1e-12));
  if (ch.empty()) return rep;

  for (const auto& b : ch.balls) {
    ChainStep st;
    st.k = b.k;
    st.radius = b.radius;
    st.d_omega = b.d_omega;
    st.rad_dom_ok = b.d_omega >= 8.0 * tau * b.radius * (1.0 - 1e-12);
    st.envelope_ratio = b.radius * std::ldexp(1.0, std::abs(b.k)) / ch.d0;
    st.distance_ratio = b.d_omega / b.radius;
    if (b.k != 0) {
      const ChainBall& prev = ch.at(b.k > 0 ? b.k - 1 : b.k + 1);
      st.meets_previous = dist(prev.center, b.center) < prev.radius + b.radius;
    }
    rep.rad_dom_ok = rep.rad_dom_ok && st.rad_dom_ok;
    rep.consecutive_ok = rep.consecutive_ok && st.meets_previous;
    rep.k_envelope = std::max({rep.k_envelope, st.envelope_ratio, 1.0 / st.envelope_ratio});
    rep.k_distance = std::max(rep.k_distance, st.distance_ratio);
    rep.steps.push_back(st);
  }
  rep.k_measured = std::max(rep.k_envelope, rep.k_distance);

  const std::size_t n = ch.balls.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& p = ch.balls[a];
      const auto& q = ch.balls[b];
      if (dist(p.center, q.center) < 4.0 * tau * (p.radius + q.radius))
        rep.n0 = std::max(rep.n0, std::abs(p.k - q.k));
    }

  // Pointwise overlap on the domain sites and the chain centers.
  std::vector<int> count(dom.space().size(), 0);
  for (const auto& b : ch.balls)
    dom.space().for_each_in_ball(b.center, 4.0 * tau * b.radius,
                                 [&](std::size_t i, double) { ++count[i]; });
  for (int c : count) rep.overlap_max = std::max(rep.overlap_max, c);
  for (const auto& p : ch.balls) {
    int c = 0;
    for (const auto& q : ch.balls) c += dist(p.center, q.center) < 4.0 * tau * q.radius;
    rep.overlap_max = std::max(rep.overlap_max, c);
  }

  const int w = rep.decay_window;
  for (const auto& b : ch.balls) {
    const int far = b.k >= 0 ? b.k + w : b.k - w;
    if (far < ch.k_min() || far > ch.k_max()) continue;
    if (!(ch.at(far).radius < b.radius)) rep.decay_ok = false;
  }
  return rep;
}

}  // namespace tracext
