#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace tracext {

// Level i of a radius: 2^{i-1} < r <= 2^i, with exact powers of two on level i.
inline int whitney_level(double r) {
  int e = 0;
  const double m = std::frexp(r, &e);  // r = m 2^e, m in [0.5, 1)
  return m == 0.5 ? e - 1 : e;
}

struct WhitneyBall {
  int level = 0;
  int j = 0;               // running index within the level
  std::size_t center = 0;  // interior site
  double radius = 0.0;     // d_Omega(center) / 8
  std::size_t anchor = Domain::npos;  // nearest true-boundary site
  std::vector<std::size_t> u;         // B(anchor, r) ∩ dOmega, site indices
  std::vector<std::size_t> u_star;    // B(anchor, 2^8 r) ∩ dOmega
  bool flagged = false;               // U was empty and had to be widened
};

// Sparse site -> ball incidence in CSR layout.
struct Incidence {
  std::vector<std::size_t> start;  // size n_sites + 1
  std::vector<std::size_t> balls;

  std::span<const std::size_t> of(std::size_t site) const {
    return {balls.data() + start[site], start[site + 1] - start[site]};
  }
};

struct WhitneyCover {
  std::vector<WhitneyBall> balls;
  Incidence in_ball;    // site ∈ B
  Incidence in_double;  // site ∈ 2B
  std::size_t subgrid_balls = 0;  // r < h/2: the ball holds only its center
  bool anchored = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline Incidence build_incidence(const Domain& dom, const std::vector<WhitneyBall>& balls,
                                 double dilation) {
  const std::size_t n = dom.space().size();
  std::vector<std::vector<std::size_t>> hits(balls.size());
  parallel_for(balls.size(), [&](std::size_t b) {
    hits[b] = dom.interior_ball(dom.space().point(balls[b].center), dilation * balls[b].radius);
  }, 16);
  Incidence inc;
  inc.start.assign(n + 1, 0);
  for (const auto& h : hits)
    for (std::size_t s : h) ++inc.start[s + 1];
  for (std::size_t s = 0; s < n; ++s) inc.start[s + 1] += inc.start[s];
  inc.balls.resize(inc.start[n]);
  std::vector<std::size_t> fill(inc.start.begin(), inc.start.end() - 1);
  for (std::size_t b = 0; b < balls.size(); ++b)
    for (std::size_t s : hits[b]) inc.balls[fill[s]++] = b;
  return inc;
}

}  // namespace detail

// Greedy Whitney cover: interior sites in ascending index; an uncovered site becomes the
// center of a ball of radius d_Omega / 8.
inline WhitneyCover build_whitney(const Domain& dom) {
  if (dom.interior().empty()) throw UsageError("domain has no interior sites");
  if (!dom.space().has_coordinates()) throw UsageError("Whitney cover needs planar coordinates");
  WhitneyCover cover;
  const double h = dom.resolution();
  std::vector<bool> covered(dom.space().size(), false);
  std::map<int, int> per_level;
  for (std::size_t s : dom.interior()) {
    if (covered[s]) continue;
    const double r = dom.distance_to_boundary(s) / 8.0;
    WhitneyBall b;
    b.center = s;
    b.radius = r;
    b.level = whitney_level(r);
    b.j = per_level[b.level]++;
    if (r < 0.5 * h) ++cover.subgrid_balls;
    covered[s] = true;
    dom.space().for_each_in_ball(s, r, [&](std::size_t i, double) { covered[i] = true; });
    cover.balls.push_back(std::move(b));
  }
  if (cover.subgrid_balls > 0)
    cover.warnings.push_back(std::to_string(cover.subgrid_balls) +
                             " Whitney balls below grid scale (d_Omega < 4h); each covers only its center");
  cover.in_ball = detail::build_incidence(dom, cover.balls, 1.0);
  cover.in_double = detail::build_incidence(dom, cover.balls, 2.0);
  return cover;
}

struct WhitneyReport {
  std::size_t coverage_violations = 0;   // (i)
  int overlap_max = 0;                   // (ii) max_x #{x ∈ 2B}
  std::map<int, std::size_t> overlap_histogram;
  std::size_t level_violations = 0;      // (iii)
  std::size_t radius_violations = 0;     // (iv)
  std::size_t double_ball_violations = 0;  // 2B meets a boundary site
  std::size_t anchor_violations = 0;     // d(x, x̂) > d_Omega(x) + h
  std::size_t level_gap_pairs = 0;           // pairs with 2B_a ∩ B_b ∋ site
  std::vector<std::pair<std::size_t, std::size_t>> level_gap_violations;  // |i - l| > 3
  std::size_t far_level_pairs = 0;       // |i - l| >= 4 pairs checked geometrically
  std::size_t far_level_violations = 0;  // dist(B_b, 2B_a) <= 0 for such a pair
  std::map<double, int> n_sigma;         // sigma -> max same-level sigma-overlap
  int max_level_gap = 0;

  bool ok() const {
    return coverage_violations == 0 && level_violations == 0 && radius_violations == 0 &&
           double_ball_violations == 0 && anchor_violations == 0 && level_gap_violations.empty() &&
           far_level_violations == 0;
  }
};

// Ordered pairs (a, b) of ball ids with 2B_a ∩ B_b containing a sample site.
inline std::vector<std::pair<std::size_t, std::size_t>> intersecting_pairs(const WhitneyCover& c) {
  const std::size_t nb = c.balls.size();
  std::vector<std::uint64_t> keys;
  const std::size_t n = c.in_ball.start.size() - 1;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a : c.in_double.of(s))
      for (std::size_t b : c.in_ball.of(s)) keys.push_back(static_cast<std::uint64_t>(a) * nb + b);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(keys.size());
  for (auto k : keys) out.emplace_back(static_cast<std::size_t>(k / nb), static_cast<std::size_t>(k % nb));
  return out;
}

// Per level, the max over balls of the number of same-level balls (itself included) with
// sigma B_j ∩ sigma B_k != ∅.
inline std::map<int, int> same_level_overlap_by_level(const WhitneyCover& c, const Domain& dom,
                                                      double sigma) {
  std::map<int, std::vector<std::size_t>> by_level;
  for (std::size_t b = 0; b < c.balls.size(); ++b) by_level[c.balls[b].level].push_back(b);
  std::map<int, int> out;
  for (const auto& [lvl, ids] : by_level) {
    int worst = 0;
    for (std::size_t a : ids) {
      int cnt = 0;
      const Point2 pa = dom.space().point(c.balls[a].center);
      for (std::size_t b : ids)
        cnt += dist(pa, dom.space().point(c.balls[b].center)) <
               sigma * (c.balls[a].radius + c.balls[b].radius);
      worst = std::max(worst, cnt);
    }
    out[lvl] = worst;
  }
  return out;
}

inline int same_level_overlap(const WhitneyCover& c, const Domain& dom, double sigma) {
  int worst = 0;
  for (const auto& [lvl, n] : same_level_overlap_by_level(c, dom, sigma)) worst = std::max(worst, n);
  return worst;
}

inline WhitneyReport verify_whitney(const WhitneyCover& cover, const Domain& dom) {
  WhitneyReport rep;
  const double h = dom.resolution();
  for (std::size_t s : dom.interior()) {
    if (cover.in_ball.of(s).empty()) ++rep.coverage_violations;
    const int cnt = static_cast<int>(cover.in_double.of(s).size());
    rep.overlap_max = std::max(rep.overlap_max, cnt);
    ++rep.overlap_histogram[cnt];
  }
  for (const auto& b : cover.balls) {
    const double lo = std::ldexp(1.0, b.level - 1), hi = std::ldexp(1.0, b.level);
    if (!(lo < b.radius && b.radius <= hi)) ++rep.level_violations;
    if (b.radius != dom.distance_to_boundary(b.center) / 8.0) ++rep.radius_violations;
    bool touches = false;
    dom.space().for_each_in_ball(b.center, 2.0 * b.radius, [&](std::size_t i, double) {
      if (dom.is_boundary(i)) touches = true;
    });
    if (touches) ++rep.double_ball_violations;
    if (cover.anchored &&
        dom.space().distance(b.center, b.anchor) > dom.distance_to_boundary(b.center) + h)
      ++rep.anchor_violations;
  }
  for (auto [a, b] : intersecting_pairs(cover)) {
    ++rep.level_gap_pairs;
    const int gap = std::abs(cover.balls[a].level - cover.balls[b].level);
    rep.max_level_gap = std::max(rep.max_level_gap, gap);
    if (gap > 3) rep.level_gap_violations.emplace_back(a, b);
  }
  const std::size_t nb = cover.balls.size();
  std::vector<std::size_t> far_pairs(nb, 0), far_bad(nb, 0);
  parallel_for(nb, [&](std::size_t a) {
    const auto& ba = cover.balls[a];
    const Point2 pa = dom.space().point(ba.center);
    for (std::size_t b = a + 1; b < nb; ++b) {
      const auto& bb = cover.balls[b];
      if (std::abs(ba.level - bb.level) < 4) continue;
      ++far_pairs[a];
      const double d = dist(pa, dom.space().point(bb.center));
      // Separation of B_b from 2B_a and of B_a from 2B_b.
      if (!(d - ba.radius - bb.radius - std::max(ba.radius, bb.radius) > 0.0)) ++far_bad[a];
    }
  }, 8);
  for (std::size_t a = 0; a < nb; ++a) {
    rep.far_level_pairs += far_pairs[a];
    rep.far_level_violations += far_bad[a];
  }
  for (double sigma : {1.0, 2.0, 2048.0}) rep.n_sigma[sigma] = same_level_overlap(cover, dom, sigma);
  return rep;
}

// ---------------------------------------------------------------------------
// Partition of unity phi_b = psi_b / sum psi, psi_b(x) = clamp(2 - d(x, x_b)/r_b, 0, 1).

class PartitionOfUnity {
 public:
  PartitionOfUnity() = default;

  PartitionOfUnity(const WhitneyCover& cover, const Domain& dom) : inc_(cover.in_double) {
    values_.assign(inc_.balls.size(), 0.0);
    for (std::size_t s : dom.interior()) {
      const std::size_t lo = inc_.start[s], hi = inc_.start[s + 1];
      double total = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto& b = cover.balls[inc_.balls[k]];
        const double d = dom.space().distance(s, b.center);
        values_[k] = std::clamp(2.0 - d / b.radius, 0.0, 1.0);
        total += values_[k];
      }
      if (!(total > 0.0))
        throw DataError("interior site " + std::to_string(s) + " is not covered by any Whitney ball");
      for (std::size_t k = lo; k < hi; ++k) values_[k] /= total;
    }
  }

  std::span<const std::size_t> balls_at(std::size_t site) const { return inc_.of(site); }
  std::span<const double> values_at(std::size_t site) const {
    return {values_.data() + inc_.start[site], inc_.start[site + 1] - inc_.start[site]};
  }

  double value(std::size_t site, std::size_t ball) const {
    const auto ids = balls_at(site);
    const auto vals = values_at(site);
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == ball) return vals[k];
    return 0.0;
  }

  double sum_at(std::size_t site) const {
    double t = 0.0;
    for (double v : values_at(site)) t += v;
    return t;
  }

 private:
  Incidence inc_;
  std::vector<double> values_;
};

inline PartitionOfUnity build_partition(const WhitneyCover& cover, const Domain& dom) {
  return PartitionOfUnity(cover, dom);
}

struct PartitionReport {
  double max_sum_error = 0.0;   // max |sum phi - 1|
  double lipschitz = 0.0;       // sup |phi(x) - phi(y)| r / d(x, y) over neighbour pairs
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t pairs = 0;
};

// Sum and range checks at every interior site; the Lipschitz ratio is taken over interior
// neighbour pairs closer than pair_radius (default 1.5 h: axis and diagonal neighbours).
inline PartitionReport verify_partition(const PartitionOfUnity& pou, const WhitneyCover& cover,
                                        const Domain& dom, double pair_radius = -1.0) {
  if (pair_radius <= 0.0) pair_radius = 1.5 * dom.resolution();
  PartitionReport rep;
  rep.min_value = 1.0;
  const auto& interior = dom.interior();
  std::vector<double> lip(interior.size(), 0.0);
  std::vector<std::size_t> npairs(interior.size(), 0);
  for (std::size_t s : interior) {
    rep.max_sum_error = std::max(rep.max_sum_error, std::abs(pou.sum_at(s) - 1.0));
    for (double v : pou.values_at(s)) {
      rep.min_value = std::min(rep.min_value, v);
      rep.max_value = std::max(rep.max_value, v);
    }
  }
  parallel_for(interior.size(), [&](std::size_t k) {
    const std::size_t x = interior[k];
    dom.space().for_each_in_ball(x, pair_radius, [&](std::size_t y, double d) {
      if (y <= x || !dom.is_interior(y)) return;
      ++npairs[k];
      auto consider = [&](std::size_t ball) {
        const double diff = std::abs(pou.value(x, ball) - pou.value(y, ball));
        lip[k] = std::max(lip[k], diff * cover.balls[ball].radius / d);
      };
      for (std::size_t b : pou.balls_at(x)) consider(b);
      for (std::size_t b : pou.balls_at(y)) consider(b);
    });
  });
  for (std::size_t k = 0; k < interior.size(); ++k) {
    rep.lipschitz = std::max(rep.lipschitz, lip[k]);
    rep.pairs += npairs[k];
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Boundary anchors x̂, U = B(x̂, r) ∩ dOmega, U* = B(x̂, 2^8 r) ∩ dOmega.

inline constexpr double kUStarDilation = 256.0;

struct AnchorReport {
  std::size_t flagged = 0;
  std::map<int, int> ustar_overlap;  // level -> max #{k : U*_j ∩ U*_k != ∅}
  int ustar_overlap_max = 0;
  double nu_ratio_max = 0.0;         // max nu(U*) / nu(U)
  std::size_t inclusion_violations = 0;  // U ⊄ U*, or U_ij ⊄ U*_lm for (i,j) ∈ I(l,m)
  double radius_ratio_min = 0.0;     // min over I(l,m) of r_ij / r_lm
  double radius_ratio_max = 0.0;
};

inline double nu_mass(const Domain& dom, std::span<const std::size_t> sites) {
  double m = 0.0;
  for (std::size_t s : sites) m += dom.nu(s);
  return m;
}

inline AnchorReport boundary_anchors(WhitneyCover& cover, const Domain& dom) {
  if (dom.boundary().empty()) throw UsageError("domain has no true boundary");
  AnchorReport rep;
  parallel_for(cover.balls.size(), [&](std::size_t k) {
    auto& b = cover.balls[k];
    b.anchor = dom.nearest_boundary_site(b.center);
    b.u = dom.boundary_ball(b.anchor, b.radius);
    b.u_star = dom.boundary_ball(b.anchor, kUStarDilation * b.radius);
    b.flagged = b.u.empty();
    if (b.flagged) b.u = {b.anchor};
  }, 16);
  cover.anchored = true;
  for (const auto& b : cover.balls) {
    if (b.flagged) ++rep.flagged;
    if (!std::includes(b.u_star.begin(), b.u_star.end(), b.u.begin(), b.u.end()))
      ++rep.inclusion_violations;
    rep.nu_ratio_max = std::max(rep.nu_ratio_max, nu_mass(dom, b.u_star) / nu_mass(dom, b.u));
  }
  if (rep.flagged > 0)
    cover.warnings.push_back(std::to_string(rep.flagged) + " Whitney balls with empty U widened to their anchor");

  // Same-level U* overlap, counted through shared boundary sites.
  std::map<int, std::vector<std::size_t>> by_level;
  for (std::size_t k = 0; k < cover.balls.size(); ++k) by_level[cover.balls[k].level].push_back(k);
  const std::size_t n = dom.space().size();
  for (const auto& [lvl, ids] : by_level) {
    std::vector<std::vector<std::size_t>> owners(n);
    for (std::size_t k : ids)
      for (std::size_t s : cover.balls[k].u_star) owners[s].push_back(k);
    int worst = 0;
    std::vector<std::size_t> seen(cover.balls.size(), static_cast<std::size_t>(-1));
    for (std::size_t k : ids) {
      int cnt = 0;
      for (std::size_t s : cover.balls[k].u_star)
        for (std::size_t o : owners[s])
          if (seen[o] != k) {
            seen[o] = k;
            ++cnt;
          }
      worst = std::max(worst, cnt);
    }
    rep.ustar_overlap[lvl] = worst;
    rep.ustar_overlap_max = std::max(rep.ustar_overlap_max, worst);
  }

  rep.radius_ratio_min = 1.0;
  rep.radius_ratio_max = 1.0;
  for (auto [a, b] : intersecting_pairs(cover)) {
    const auto& ij = cover.balls[a];
    const auto& lm = cover.balls[b];
    if (!std::includes(lm.u_star.begin(), lm.u_star.end(), ij.u.begin(), ij.u.end()))
      ++rep.inclusion_violations;
    const double q = ij.radius / lm.radius;
    rep.radius_ratio_min = std::min(rep.radius_ratio_min, q);
    rep.radius_ratio_max = std::max(rep.radius_ratio_max, q);
  }
  return rep;
}

}  // namespace tracext
