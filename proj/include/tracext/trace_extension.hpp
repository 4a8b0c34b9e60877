#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "besov.hpp"
#include "cone_chain.hpp"
#include "domain.hpp"
#include "error.hpp"
#include "field.hpp"
#include "gradient.hpp"
#include "parallel.hpp"
#include "whitney.hpp"

namespace tracext {

// ---------------------------------------------------------------------------
// Extension F(x) = sum_b (⨍_{U_b} f dnu) phi_b(x)

inline std::vector<double> anchor_averages(const ScalarField& f, const WhitneyCover& cover,
                                           const Domain& dom) {
  std::vector<double> avg(cover.balls.size(), 0.0);
  for (std::size_t b = 0; b < cover.balls.size(); ++b) {
    double m = 0.0, s = 0.0;
    for (std::size_t z : cover.balls[b].u) {
      m += dom.nu(z);
      s += dom.nu(z) * f.values[z];
    }
    avg[b] = s / m;
  }
  return avg;
}

inline ScalarField extend(const ScalarField& f, const WhitneyCover& cover,
                          const PartitionOfUnity& pou, const Domain& dom) {
  if (!cover.anchored) throw UsageError("extend: Whitney cover has no boundary anchors");
  if (cover.in_double.start.size() != dom.space().size() + 1)
    throw DataError("extend: cover does not belong to this domain");
  check_field(f, dom, Support::boundary, "extend");
  const auto avg = anchor_averages(f, cover, dom);
  ScalarField F;
  F.support = Support::interior;
  F.provenance = Provenance::extension;
  F.values.assign(dom.space().size(), std::numeric_limits<double>::quiet_NaN());
  const auto& in = dom.interior();
  parallel_for(in.size(), [&](std::size_t k) {
    const std::size_t x = in[k];
    const auto ids = pou.balls_at(x);
    const auto phi = pou.values_at(x);
    double v = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) v += avg[ids[i]] * phi[i];
    F.values[x] = v;
  });
  return F;
}

// ---------------------------------------------------------------------------
// Trace Tu(zeta) = lim ⨍_{B(zeta, r)} u dmu along a decreasing radius schedule.

struct TraceParams {
  std::vector<double> radii;  // strictly decreasing
  std::size_t min_samples = 3;
  double tolerance = 0.05;
};

inline TraceParams default_trace_params(const Domain& dom) {
  const double h = dom.resolution();
  return TraceParams{{16.0 * h, 8.0 * h, 4.0 * h, 2.0 * h}, 3, 0.05};
}

struct TraceResult {
  ScalarField values;             // boundary-supported; NaN where no radius was admissible
  std::vector<bool> has_value;    // per site of the space
  std::vector<bool> converged;
  std::vector<int> radius_index;  // index into the schedule, -1 if absent
  std::size_t missing = 0;
  std::size_t unconverged = 0;
};

inline void check_trace_params(const TraceParams& tp, const Domain& dom) {
  if (tp.radii.empty()) throw UsageError("trace: empty radius schedule");
  for (std::size_t k = 0; k < tp.radii.size(); ++k) {
    if (!(tp.radii[k] > 0.0)) throw UsageError("trace: radii must be positive");
    if (k > 0 && !(tp.radii[k] < tp.radii[k - 1])) throw UsageError("trace: schedule must be decreasing");
  }
  if (tp.radii.back() < 2.0 * dom.resolution() * (1.0 - 1e-12))
    throw UsageError("trace: smallest radius must be at least 2h");
  if (tp.min_samples == 0) throw UsageError("trace: min_samples must be positive");
}

inline TraceResult trace(const ScalarField& u, const Domain& dom, const TraceParams& tp) {
  check_trace_params(tp, dom);
  check_field(u, dom, Support::interior, "trace");
  const std::size_t n = dom.space().size();
  TraceResult res;
  res.values.support = Support::boundary;
  res.values.provenance = Provenance::trace;
  res.values.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  res.has_value.assign(n, false);
  res.converged.assign(n, false);
  res.radius_index.assign(n, -1);
  const auto& bd = dom.boundary();
  parallel_for(bd.size(), [&](std::size_t k) {
    const std::size_t z = bd[k];
    std::optional<double> last, before;
    int idx = -1;
    for (std::size_t r = 0; r < tp.radii.size(); ++r) {
      double m = 0.0, s = 0.0;
      std::size_t cnt = 0;
      dom.space().for_each_in_ball(z, tp.radii[r], [&](std::size_t x, double) {
        if (!dom.is_interior(x)) return;
        ++cnt;
        m += dom.space().weight(x);
        s += dom.space().weight(x) * u.values[x];
      });
      if (cnt < tp.min_samples || !(m > 0.0)) continue;
      before = last;
      last = s / m;
      idx = static_cast<int>(r);
    }
    if (!last) return;
    res.values.values[z] = *last;
    res.has_value[z] = true;
    res.radius_index[z] = idx;
    res.converged[z] = before && std::abs(*last - *before) <= tp.tolerance;
  });
  for (std::size_t z : bd) {
    res.missing += !res.has_value[z];
    res.unconverged += res.has_value[z] && !res.converged[z];
  }
  return res;
}

// ---------------------------------------------------------------------------
// Roundtrip T(Ef) against f.

struct RoundtripReport {
  double sup_err = 0.0;
  double lp_err = 0.0;  // (sum nu |T E f - f|^p)^{1/p} over the compared sites
  std::vector<double> per_site;  // indexed by boundary position; NaN where excluded
  std::size_t argmax = Domain::npos;  // site index of the largest error
  std::size_t compared = 0;
  std::size_t excluded = 0;
  std::size_t n_flagged = 0;  // flagged Whitney balls
  double flagged_fraction = 0.0;
};

inline RoundtripReport roundtrip_error(const ScalarField& f, const Domain& dom, const WhitneyCover& cover,
                                       const PartitionOfUnity& pou, const TraceParams& tp,
                                       double p = 2.0) {
  if (!(p >= 1.0)) throw UsageError("roundtrip: p must be >= 1");
  const ScalarField F = extend(f, cover, pou, dom);
  const TraceResult T = trace(F, dom, tp);
  RoundtripReport rep;
  for (const auto& b : cover.balls) rep.n_flagged += b.flagged;
  rep.flagged_fraction = cover.balls.empty() ? 0.0 : double(rep.n_flagged) / double(cover.balls.size());

  // Sites whose final trace ball sees a flagged ball are left out.
  std::vector<bool> tainted(dom.space().size(), false);
  if (rep.n_flagged > 0)
    for (std::size_t x : dom.interior())
      for (std::size_t b : pou.balls_at(x))
        if (cover.balls[b].flagged) tainted[x] = true;

  const auto& bd = dom.boundary();
  rep.per_site.assign(bd.size(), std::numeric_limits<double>::quiet_NaN());
  double acc = 0.0;
  for (std::size_t k = 0; k < bd.size(); ++k) {
    const std::size_t z = bd[k];
    if (!T.has_value[z]) {
      ++rep.excluded;
      continue;
    }
    bool bad = false;
    if (rep.n_flagged > 0)
      dom.space().for_each_in_ball(z, tp.radii[static_cast<std::size_t>(T.radius_index[z])],
                                   [&](std::size_t x, double) { bad = bad || tainted[x]; });
    if (bad) {
      ++rep.excluded;
      continue;
    }
    const double e = std::abs(T.values.values[z] - f.values[z]);
    rep.per_site[k] = e;
    ++rep.compared;
    acc += dom.nu(z) * std::pow(e, p);
    if (rep.argmax == Domain::npos || e > rep.sup_err) {
      rep.sup_err = e;
      rep.argmax = z;
    }
  }
  rep.lp_err = std::pow(acc, 1.0 / p);
  return rep;
}

// ---------------------------------------------------------------------------
// Chain oscillation estimate along a cone chain between boundary sites xi and zeta.

struct ChainEstimateParams {
  double p = 2.0;
  std::optional<double> epsilon;  // default (p - theta) / 2
  double lambda = 1.0;            // dilation in 4 lambda B_k
};

struct ChainEstimate {
  double lhs = 0.0;          // |Tu(zeta) - Tu(xi)|
  double raw_rhs = 0.0;      // the bound without its constant
  double epsilon = 0.0;
  std::vector<double> ball_average;  // u_{B_k} in ascending k; NaN for balls without samples
  std::vector<double> lip_average;   // ⨍_{4 lambda B_k} lip^p (or lip for p = 1)
  double telescoping_sum = 0.0;      // sum of consecutive differences over sampled balls
  double end_difference = 0.0;       // first sampled average minus last sampled average
  std::size_t sampled_balls = 0;
  double ratio(double C) const { return raw_rhs > 0.0 ? lhs / (C * raw_rhs) : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0); }
};

inline double chain_epsilon(const Domain& dom, const ChainEstimateParams& cp) {
  const double theta = dom.theta();
  const double eps = cp.epsilon ? *cp.epsilon : 0.5 * (cp.p - theta);
  if (!(cp.p >= 1.0)) throw UsageError("chain estimate: p must be >= 1");
  if (!(eps > 0.0)) throw UsageError("chain estimate: epsilon must be positive");
  if (cp.p == 1.0) {
    if (eps >= 1.0 - theta) throw UsageError("chain estimate: p = 1 needs epsilon < 1 - theta");
  } else if (!(theta + eps < cp.p)) {
    throw UsageError("chain estimate: theta + epsilon must be below p");
  }
  return eps;
}

inline ChainEstimate chain_oscillation_estimate(const ScalarField& u, const TraceResult& tu,
                                                const ScalarField& lip, const ConeChain& chain,
                                                std::size_t xi, std::size_t zeta, const Domain& dom,
                                                const ChainEstimateParams& cp) {
  ChainEstimate est;
  est.epsilon = chain_epsilon(dom, cp);
  check_field(u, dom, Support::interior, "chain estimate");
  check_field(lip, dom, Support::interior, "chain estimate");
  if (!dom.is_boundary(xi) || !dom.is_boundary(zeta))
    throw UsageError("chain estimate: endpoints must be boundary sites");
  if (!tu.has_value.at(xi) || !tu.has_value.at(zeta))
    throw DataError("chain estimate: trace missing at a chain endpoint");
  est.lhs = std::abs(tu.values.values[zeta] - tu.values.values[xi]);

  const double p = cp.p;
  const double theta = dom.theta();
  double first = 0.0, second = 0.0;
  std::optional<double> prev, head;
  for (const auto& b : chain.balls) {
    double m = 0.0, s = 0.0;
    dom.space().for_each_in_ball(b.center, b.radius, [&](std::size_t x, double) {
      if (!dom.is_interior(x)) return;
      m += dom.space().weight(x);
      s += dom.space().weight(x) * u.values[x];
    });
    const double ub = m > 0.0 ? s / m : std::numeric_limits<double>::quiet_NaN();
    est.ball_average.push_back(ub);
    if (m > 0.0) {
      ++est.sampled_balls;
      if (prev) est.telescoping_sum += *prev - ub;
      if (!head) head = ub;
      prev = ub;
    }

    double mo = 0.0, g = 0.0;
    dom.space().for_each_in_ball(b.center, 4.0 * cp.lambda * b.radius, [&](std::size_t x, double) {
      if (!dom.is_interior(x)) return;
      mo += dom.space().weight(x);
      g += dom.space().weight(x) * (p == 1.0 ? lip.values[x] : std::pow(lip.values[x], p));
    });
    if (!(mo > 0.0)) throw DataError("chain estimate: enlarged chain ball holds no interior samples");
    const double a = g / mo;
    est.lip_average.push_back(a);
    if (p == 1.0) {
      first += b.radius * a;
    } else {
      first += std::pow(b.radius, theta + est.epsilon) * a;
      second += std::pow(b.radius, (p - theta - est.epsilon) / (p - 1.0));
    }
  }
  if (head) est.end_difference = *head - *prev;
  est.raw_rhs = p == 1.0 ? first : std::pow(first, 1.0 / p) * std::pow(second, 1.0 - 1.0 / p);
  return est;
}

// Smallest C with lhs <= C raw_rhs on the sample, times a safety margin.
inline double calibrate_chain_constant(std::span<const ChainEstimate> sample, double margin = 2.0) {
  double c = 0.0;
  for (const auto& e : sample) {
    if (e.raw_rhs > 0.0) c = std::max(c, e.lhs / e.raw_rhs);
    else if (e.lhs > 0.0) return std::numeric_limits<double>::infinity();
  }
  return margin * c;
}

// ---------------------------------------------------------------------------
// Locality constants.

struct LocalityReport {
  double constant = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // zero boundary mass on the right-hand side
};

// max over Whitney balls of sum_{x in B} mu |F|^p / (2^{l theta} sum_{U*} nu |f|^p)
inline LocalityReport measure_ball_locality(const ScalarField& F, const ScalarField& f,
                                            const WhitneyCover& cover, const Domain& dom, double p) {
  if (!cover.anchored) throw UsageError("locality: cover has no anchors");
  LocalityReport rep;
  std::vector<double> lhs(cover.balls.size(), 0.0);
  const std::size_t n = dom.space().size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t b : cover.in_ball.of(x)) lhs[b] += dom.space().weight(x) * std::pow(std::abs(F.values[x]), p);
  for (std::size_t b = 0; b < cover.balls.size(); ++b) {
    const auto& ball = cover.balls[b];
    if (ball.flagged) {
      ++rep.skipped;
      continue;
    }
    double rhs = 0.0;
    for (std::size_t z : ball.u_star) rhs += dom.nu(z) * std::pow(std::abs(f.values[z]), p);
    rhs *= std::pow(2.0, ball.level * dom.theta());
    if (!(rhs > 0.0)) {
      ++rep.skipped;
      continue;
    }
    ++rep.evaluated;
    rep.constant = std::max(rep.constant, lhs[b] / rhs);
  }
  return rep;
}

// max over (zeta, r) of sum_{B(zeta,r) ∩ Omega} mu |F|^p / (r^theta sum_{B(zeta, 2^8 r) ∩ dOmega} nu |f|^p)
inline LocalityReport measure_layer_bound(const ScalarField& F, const ScalarField& f, const Domain& dom,
                                          std::span<const std::size_t> centers,
                                          std::span<const double> radii, double p) {
  LocalityReport rep;
  for (std::size_t z : centers) {
    if (!dom.is_boundary(z)) throw UsageError("layer bound: centers must be boundary sites");
    for (double r : radii) {
      double lhs = 0.0;
      dom.space().for_each_in_ball(z, r, [&](std::size_t x, double) {
        if (dom.is_interior(x)) lhs += dom.space().weight(x) * std::pow(std::abs(F.values[x]), p);
      });
      double rhs = 0.0;
      dom.for_each_boundary_in_ball(z, kUStarDilation * r, [&](std::size_t b, double) {
        rhs += dom.nu(b) * std::pow(std::abs(f.values[b]), p);
      });
      rhs *= std::pow(r, dom.theta());
      if (!(rhs > 0.0)) {
        ++rep.skipped;
        continue;
      }
      ++rep.evaluated;
      rep.constant = std::max(rep.constant, lhs / rhs);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical operator norms.

struct NormRatio {
  std::string name;
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;
};

struct OperatorNormReport {
  std::string op;  // "E" or "T"
  std::vector<NormRatio> per_function;
  double K = 0.0;
};

struct OperatorNormParams {
  double p = 2.0;
  double alpha = 0.5;
  double dyadic_base = 1.0;
  std::optional<double> lip_radius;  // default 2h
  std::optional<TraceParams> trace;
};

inline void check_trace_exponents(const Domain& dom, double p, double alpha) {
  const double theta = dom.theta();
  if (!(theta > 0.0 && theta < p)) throw UsageError("need 0 < theta < p");
  if (std::abs(alpha - (1.0 - theta / p)) > 1e-12) throw UsageError("alpha must equal 1 - theta/p");
}

// Besov seminorm of a boundary field over the sites where it is finite.
inline double boundary_besov(const ScalarField& f, const Domain& dom, const BesovParams& bp) {
  const auto& bd = dom.boundary();
  std::vector<std::size_t> keep;
  std::vector<double> vals, w;
  for (std::size_t k = 0; k < bd.size(); ++k)
    if (std::isfinite(f.values[bd[k]])) {
      keep.push_back(k);
      vals.push_back(f.values[bd[k]]);
      w.push_back(dom.nu_weights()[k]);
    }
  if (keep.size() == bd.size()) return besov_dyadic(dom.boundary_space(), vals, bp).value;
  if (keep.size() < 2) throw DataError("too few finite boundary values for a seminorm");
  const SampledSpace sub = dom.boundary_space().subspace(keep, w);
  return besov_dyadic(sub, vals, bp).value;
}

inline OperatorNormReport extension_norm(const Domain& dom, const WhitneyCover& cover,
                                         const PartitionOfUnity& pou,
                                         std::span<const std::pair<std::string, ScalarField>> family,
                                         const OperatorNormParams& op) {
  check_trace_exponents(dom, op.p, op.alpha);
  const BesovParams bp{op.alpha, op.p, op.dyadic_base, std::nullopt, std::nullopt};
  const double rho = op.lip_radius ? *op.lip_radius : default_lip_radius(dom);
  OperatorNormReport rep;
  rep.op = "E";
  for (const auto& [name, f] : family) {
    NormRatio r;
    r.name = name;
    r.input_norm = besov_dyadic(f, dom, bp).value;
    if (!(r.input_norm > 0.0)) throw DataError("extension norm: zero seminorm input " + name);
    r.output_norm = dirichlet_energy(local_lip(extend(f, cover, pou, dom), dom, rho), dom, op.p);
    r.ratio = r.output_norm / r.input_norm;
    rep.K = std::max(rep.K, r.ratio);
    rep.per_function.push_back(std::move(r));
  }
  return rep;
}

inline OperatorNormReport trace_norm(const Domain& dom,
                                     std::span<const std::pair<std::string, ScalarField>> family,
                                     const OperatorNormParams& op) {
  check_trace_exponents(dom, op.p, op.alpha);
  const BesovParams bp{op.alpha, op.p, op.dyadic_base, std::nullopt, std::nullopt};
  const double rho = op.lip_radius ? *op.lip_radius : default_lip_radius(dom);
  const TraceParams tp = op.trace ? *op.trace : default_trace_params(dom);
  OperatorNormReport rep;
  rep.op = "T";
  for (const auto& [name, u] : family) {
    NormRatio r;
    r.name = name;
    r.input_norm = dirichlet_energy(local_lip(u, dom, rho), dom, op.p);
    if (!(r.input_norm > 0.0)) throw DataError("trace norm: zero energy input " + name);
    r.output_norm = boundary_besov(trace(u, dom, tp).values, dom, bp);
    r.ratio = r.output_norm / r.input_norm;
    rep.K = std::max(rep.K, r.ratio);
    rep.per_function.push_back(std::move(r));
  }
  return rep;
}

}  // namespace tracext
