#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "field.hpp"
#include "parallel.hpp"
#include "space.hpp"

namespace tracext {

// Homogeneous Besov seminorm HB^alpha_{p,p}; only q = p is supported.
struct BesovParams {
  double alpha = 0.5;
  double p = 2.0;
  double dyadic_base = 1.0;  // C in the balls B(y, C 2^l)
  std::optional<int> l_min;  // defaults: ceil(log2 h) .. ceil(log2 diam) + 1
  std::optional<int> l_max;
};

struct LevelTerm {
  int level = 0;
  double radius = 0.0;
  double term = 0.0;
};

struct BesovResult {
  std::string form;
  double power = 0.0;  // the seminorm raised to p
  double value = 0.0;  // the seminorm itself
  std::vector<LevelTerm> per_level;
  std::size_t skipped = 0;
};

namespace detail {

inline void check_besov_params(const BesovParams& bp) {
  if (!(bp.p >= 1.0)) throw UsageError("Besov exponent p must be >= 1");
  if (!(bp.alpha >= 0.0)) throw UsageError("Besov smoothness alpha must be >= 0");
  if (!(bp.dyadic_base > 0.0)) throw UsageError("dyadic base C must be positive");
}

// For one center y: neighbours sorted by distance with prefix sums of nu and of
// nu |f(y) - f(x)|^p. Ball statistics for any radius then cost one binary search.
struct RadialProfile {
  std::vector<double> dist;
  std::vector<double> mass;  // prefix, size n + 1
  std::vector<double> osc;   // prefix, size n + 1

  RadialProfile(const SampledSpace& s, std::span<const double> f, std::size_t y, double p) {
    const std::size_t n = s.size();
    std::vector<std::size_t> order(n);
    std::vector<double> d(n);
    for (std::size_t x = 0; x < n; ++x) {
      order[x] = x;
      d[x] = s.distance(y, x);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    dist.resize(n);
    mass.assign(n + 1, 0.0);
    osc.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t x = order[k];
      dist[k] = d[x];
      mass[k + 1] = mass[k] + s.weight(x);
      osc[k + 1] = osc[k] + s.weight(x) * std::pow(std::abs(f[y] - f[x]), p);
    }
  }

  // Number of points strictly inside radius r.
  std::size_t inside(double r) const {
    return static_cast<std::size_t>(std::lower_bound(dist.begin(), dist.end(), r) - dist.begin());
  }

  // ⨍_{B(y,r)} |f(y) - f(x)|^p dnu(x); nullopt for an empty (massless) ball.
  std::optional<double> average(double r) const {
    const std::size_t k = inside(r);
    if (!(mass[k] > 0.0)) return std::nullopt;
    return osc[k] / mass[k];
  }
};

inline std::vector<RadialProfile> radial_profiles(const SampledSpace& s, std::span<const double> f,
                                                  double p) {
  if (f.size() != s.size()) throw DataError("field length does not match the space");
  for (double v : f)
    if (!std::isfinite(v)) throw DataError("non-finite field value");
  std::vector<std::optional<RadialProfile>> tmp(s.size());
  parallel_for(s.size(), [&](std::size_t y) { tmp[y].emplace(s, f, y, p); }, 8);
  std::vector<RadialProfile> out;
  out.reserve(s.size());
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

inline std::pair<int, int> level_range(const SampledSpace& s, const BesovParams& bp) {
  const int lo = bp.l_min ? *bp.l_min : static_cast<int>(std::ceil(std::log2(s.min_spacing())));
  const int hi = bp.l_max ? *bp.l_max : static_cast<int>(std::ceil(std::log2(s.diameter()))) + 1;
  if (hi < lo) throw UsageError("empty dyadic level range");
  return {lo, hi};
}

inline void finish(BesovResult& r, double p) { r.value = std::pow(r.power, 1.0 / p); }

}  // namespace detail

// sum_l 2^{-l alpha p} sum_y nu_y ⨍_{B(y, C 2^l)} |f(y) - f(x)|^p dnu(x).
inline BesovResult besov_dyadic(const SampledSpace& s, std::span<const double> f,
                                const BesovParams& bp) {
  detail::check_besov_params(bp);
  const auto profiles = detail::radial_profiles(s, f, bp.p);
  const auto [lo, hi] = detail::level_range(s, bp);
  BesovResult res;
  res.form = "dyadic";
  std::size_t nonempty_levels = 0;
  for (int l = lo; l <= hi; ++l) {
    const double radius = bp.dyadic_base * std::ldexp(1.0, l);
    double sum = 0.0;
    bool any = false;
    for (std::size_t y = 0; y < s.size(); ++y) {
      const auto avg = profiles[y].average(radius);
      if (!avg) {
        ++res.skipped;
        continue;
      }
      any = true;
      sum += s.weight(y) * *avg;
    }
    nonempty_levels += any;
    const double term = sum * std::pow(2.0, -static_cast<double>(l) * bp.alpha * bp.p);
    res.per_level.push_back({l, radius, term});
    res.power += term;
  }
  if (nonempty_levels == 0) throw DataError("all dyadic levels are empty");
  detail::finish(res, bp.p);
  return res;
}

// sum_y sum_{x != y} nu_y nu_x |f(y) - f(x)|^p / (d^{alpha p} nu(B(y, d))).
inline BesovResult besov_double_integral(const SampledSpace& s, std::span<const double> f,
                                         const BesovParams& bp) {
  detail::check_besov_params(bp);
  const auto profiles = detail::radial_profiles(s, f, bp.p);
  BesovResult res;
  res.form = "integral";
  std::vector<double> rows(s.size(), 0.0);
  parallel_for(s.size(), [&](std::size_t y) {
    const auto& pr = profiles[y];
    double row = 0.0;
    // Position 0 is y itself (distance 0); a second zero means a duplicated site.
    if (pr.dist.size() > 1 && pr.dist[1] == 0.0)
      throw DataError("distinct boundary sites at zero distance");
    for (std::size_t k = 1; k < pr.dist.size(); ++k) {
      const double d = pr.dist[k];
      const double ball = pr.mass[pr.inside(d)];  // open ball B(y, d)
      const double diff = (pr.osc[k + 1] - pr.osc[k]);  // nu_x |f(y) - f(x)|^p
      if (diff == 0.0) continue;
      row += diff / (std::pow(d, bp.alpha * bp.p) * ball);
    }
    rows[y] = s.weight(y) * row;
  }, 8);
  for (double r : rows) res.power += r;
  detail::finish(res, bp.p);
  return res;
}

// Log-spaced radii from h to 2^{l_max} with `per_octave` points per doubling.
inline std::vector<double> default_radius_grid(const SampledSpace& s, const BesovParams& bp,
                                               int per_octave = 16) {
  const auto [lo, hi] = detail::level_range(s, bp);
  const double a = s.min_spacing();
  const double b = bp.dyadic_base * std::ldexp(1.0, hi);
  const int n = std::max(2, static_cast<int>(std::ceil(std::log2(b / a) * per_octave)) + 1);
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) grid[static_cast<std::size_t>(k)] = a * std::pow(b / a, static_cast<double>(k) / (n - 1));
  (void)lo;
  return grid;
}

// (∫ ∫ ⨍_{B(y,r)} |f(y) - f(x)|^p / r^{alpha p} dnu dnu dr/r)^{1/p}, outer integral by the
// trapezoid rule in log r over the given grid.
inline BesovResult besov_continuous(const SampledSpace& s, std::span<const double> f,
                                    const BesovParams& bp, std::span<const double> grid) {
  detail::check_besov_params(bp);
  if (grid.size() < 2) throw UsageError("radius grid needs at least two points");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0)) throw UsageError("radius grid must be positive");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw UsageError("radius grid must be strictly increasing");
  }
  const auto profiles = detail::radial_profiles(s, f, bp.p);
  BesovResult res;
  res.form = "continuous";
  std::vector<double> g(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    for (std::size_t y = 0; y < s.size(); ++y) {
      const auto avg = profiles[y].average(grid[k]);
      if (!avg) {
        ++res.skipped;
        continue;
      }
      sum += s.weight(y) * *avg;
    }
    g[k] = sum / std::pow(grid[k], bp.alpha * bp.p);
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    res.power += 0.5 * (g[k] + g[k + 1]) * std::log(grid[k + 1] / grid[k]);
  detail::finish(res, bp.p);
  return res;
}

// Domain-level wrappers: the boundary field against (dOmega, nu).
inline BesovResult besov_dyadic(const ScalarField& f, const Domain& dom, const BesovParams& bp) {
  const auto v = boundary_values(f, dom);
  return besov_dyadic(dom.boundary_space(), v, bp);
}

inline BesovResult besov_double_integral(const ScalarField& f, const Domain& dom, const BesovParams& bp) {
  const auto v = boundary_values(f, dom);
  return besov_double_integral(dom.boundary_space(), v, bp);
}

inline BesovResult besov_continuous(const ScalarField& f, const Domain& dom, const BesovParams& bp,
                                    std::span<const double> grid = {}) {
  const auto v = boundary_values(f, dom);
  if (grid.empty()) {
    const auto g = default_radius_grid(dom.boundary_space(), bp);
    return besov_continuous(dom.boundary_space(), v, bp, g);
  }
  return besov_continuous(dom.boundary_space(), v, bp, grid);
}

}  // namespace tracext
