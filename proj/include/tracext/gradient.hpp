#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "field.hpp"
#include "parallel.hpp"

namespace tracext {

// Max difference quotient over interior neighbours in the open ball B(x, rho).
inline ScalarField local_lip(const ScalarField& u, const Domain& dom, double rho) {
  if (!(rho >= 2.0 * dom.resolution() * (1.0 - 1e-12)))
    throw UsageError("local_lip: neighbour radius must be at least 2h");
  check_field(u, dom, Support::interior, "local_lip");
  const auto& sp = dom.space();
  ScalarField g;
  g.support = Support::interior;
  g.provenance = Provenance::gradient_surrogate;
  g.values.assign(sp.size(), std::numeric_limits<double>::quiet_NaN());
  const auto& in = dom.interior();
  parallel_for(in.size(), [&](std::size_t k) {
    const std::size_t x = in[k];
    double best = 0.0;
    sp.for_each_in_ball(x, rho, [&](std::size_t y, double d) {
      if (y == x || d == 0.0 || !dom.is_interior(y)) return;
      best = std::max(best, std::abs(u.values[y] - u.values[x]) / d);
    });
    g.values[x] = best;
  });
  return g;
}

// (sum over interior sites of mu_x lip(x)^p)^{1/p}
inline double dirichlet_energy(const ScalarField& lip, const Domain& dom, double p) {
  if (!(p >= 1.0)) throw UsageError("dirichlet_energy: p must be >= 1");
  check_field(lip, dom, Support::interior, "dirichlet_energy");
  double s = 0.0;
  for (std::size_t x : dom.interior()) s += dom.space().weight(x) * std::pow(std::abs(lip.values[x]), p);
  return std::pow(s, 1.0 / p);
}

inline double default_lip_radius(const Domain& dom) { return 2.0 * dom.resolution(); }

struct PoincareReport {
  double worst_ratio = 0.0;
  std::size_t witness = 0;  // index into the ball sample
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

// max over balls of ⨍_B |u - u_B| dmu / (r (⨍_{lambda B} lip^p dmu)^{1/p})
inline PoincareReport check_poincare(const Domain& dom, const ScalarField& u, const ScalarField& lip,
                                     double p, double lambda, std::span<const Ball> balls) {
  if (!(p >= 1.0)) throw UsageError("check_poincare: p must be >= 1");
  if (!(lambda >= 1.0)) throw UsageError("check_poincare: dilation must be >= 1");
  check_field(u, dom, Support::interior, "check_poincare");
  check_field(lip, dom, Support::interior, "check_poincare");
  PoincareReport rep;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    const auto inner = dom.interior_ball(balls[b].center, balls[b].radius);
    const auto outer = dom.interior_ball(balls[b].center, lambda * balls[b].radius);
    double m = 0.0, mu_sum = 0.0;
    for (std::size_t x : inner) {
      m += dom.space().weight(x);
      mu_sum += dom.space().weight(x) * u.values[x];
    }
    if (!(m > 0.0)) {
      ++rep.skipped;
      continue;
    }
    const double ub = mu_sum / m;
    double osc = 0.0;
    for (std::size_t x : inner) osc += dom.space().weight(x) * std::abs(u.values[x] - ub);
    osc /= m;
    double mo = 0.0, g = 0.0;
    for (std::size_t x : outer) {
      mo += dom.space().weight(x);
      g += dom.space().weight(x) * std::pow(lip.values[x], p);
    }
    const double denom = balls[b].radius * std::pow(g / mo, 1.0 / p);
    if (!(denom > 0.0)) {
      ++rep.skipped;
      continue;
    }
    ++rep.evaluated;
    const double ratio = osc / denom;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.witness = b;
    }
  }
  return rep;
}

}  // namespace tracext
