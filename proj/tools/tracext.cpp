// tracext: command-line front end for domain generation, the extension/trace pipeline and
// the verification suites.
//
// Exit codes: 0 all hard checks pass, 1 a hard invariant failed, 2 usage or data error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tracext/tracext.hpp>

using namespace tracext;

namespace {

constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct Config {
  std::string preset = "halfplane";
  double h = 1.0 / 16;
  double theta = 1.0;
  double p = 2.0;
  std::optional<double> alpha;
  double tau = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out, report;
  std::string domain_path, field_path;
  std::string suite = "all";
  std::string form = "dyadic";
  double base = 1.0;
  bool theta_given = false;
};

double alpha_of(const Config& c, double theta) {
  const double a = 1.0 - theta / c.p;
  if (c.alpha && std::abs(*c.alpha - a) > 1e-12)
    throw UsageError("alpha must equal 1 - theta/p (got " + std::to_string(*c.alpha) + ", expected " +
                     std::to_string(a) + ")");
  return a;
}

void check_theta(double theta, double p) {
  if (!(theta > 0.0 && theta < p)) throw UsageError("need 0 < theta < p");
}

Domain load_domain(const Config& c) {
  if (!c.domain_path.empty()) return domain_from_json(read_json_file(c.domain_path));
  check_theta(c.theta, c.p);
  return build_domain(c.preset, c.h, c.theta);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_text_file(path, text);
}

WhitneyCover anchored_cover(const Domain& d) {
  auto c = build_whitney(d);
  boundary_anchors(c, d);
  return c;
}

// Refined copy of a preset domain, if the domain came from a known preset.
std::optional<Domain> refined(const Domain& d) {
  static const std::set<std::string> presets{"halfplane", "square", "lshape"};
  if (!presets.count(d.window().preset) || !(d.window().h > 0)) return std::nullopt;
  return build_domain(d.window().preset, d.window().h / 2, d.theta());
}

double drift(double a, double b) { return std::max(a / b, b / a); }

// ---------------------------------------------------------------------------
// Verification report

class Report {
 public:
  void check(const std::string& module, const std::string& name, bool hard, bool pass, json measured) {
    std::printf("[%s] %-5s %s: %s\n", module.c_str(), pass ? "ok" : (hard ? "FAIL" : "warn"), name.c_str(),
                measured.dump().c_str());
    checks_.push_back({{"module", module}, {"name", name}, {"hard", hard}, {"pass", pass}, {"measured", std::move(measured)}});
    if (hard && !pass) failed_ = true;
  }
  void warn(const std::string& w) {
    std::printf("warning: %s\n", w.c_str());
    warnings_.push_back(w);
  }
  json& section(const std::string& k) { return extra_[k]; }
  bool failed() const { return failed_; }
  json to_json(const Domain& d, const std::string& suite) const {
    json j{{"suite", suite},
           {"domain", {{"preset", d.window().preset}, {"h", num(d.resolution())}, {"theta", num(d.theta())},
                       {"sites", d.space().size()}, {"boundary_sites", d.boundary().size()}}},
           {"checks", checks_},
           {"warnings", warnings_},
           {"pass", !failed_}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    return j;
  }

 private:
  json checks_ = json::array();
  json warnings_ = json::array();
  json extra_ = json::object();
  bool failed_ = false;
};

void suite_whitney(const Domain& d, Report& r) {
  auto cover = build_whitney(d);
  const auto anchors = boundary_anchors(cover, d);
  const auto w = verify_whitney(cover, d);
  r.check("whitney", "cover properties", true, w.ok(),
          {{"coverage_violations", w.coverage_violations}, {"level_violations", w.level_violations},
           {"radius_violations", w.radius_violations}, {"double_ball_violations", w.double_ball_violations},
           {"anchor_violations", w.anchor_violations}, {"far_level_violations", w.far_level_violations},
           {"overlap_max", w.overlap_max}, {"max_level_gap", w.max_level_gap}, {"balls", cover.balls.size()}});
  r.check("whitney", "intersecting levels differ by at most 3", true,
          w.level_gap_pairs > 0 && w.level_gap_violations.empty(),
          {{"pairs", w.level_gap_pairs}, {"violations", w.level_gap_violations.size()}});
  const auto pou = build_partition(cover, d);
  const auto pr = verify_partition(pou, cover, d);
  r.check("whitney", "partition sums to one", true, pr.max_sum_error <= 1e-9,
          {{"max_sum_error", num(pr.max_sum_error)}, {"C_pou", num(pr.lipschitz)}});
  r.check("whitney", "anchor sets nested", true, anchors.inclusion_violations == 0,
          {{"inclusion_violations", anchors.inclusion_violations}, {"nu_ratio_max", num(anchors.nu_ratio_max)},
           {"ustar_overlap_max", anchors.ustar_overlap_max}});
  const double frac = cover.balls.empty() ? 0.0 : double(anchors.flagged) / double(cover.balls.size());
  r.check("whitney", "flagged balls below 1%", true, frac < 0.01,
          {{"flagged", anchors.flagged}, {"fraction", num(frac)}});
  for (const auto& s : cover.warnings) r.warn(s);
}

void suite_codim(const Domain& d, Report& r) {
  const double h = d.resolution();
  const Box box = bounding_box(d);
  const double r_max = std::max(4 * h, std::min(1.0, std::hypot(box.width(), box.height()) / 4));
  const auto rep = check_codimension(d, codim_centers(d, r_max), codim_radii(d, r_max));
  json m{{"samples", rep.samples.size()}, {"skipped", rep.skipped.size()}, {"min_ratio", num(rep.min_ratio)},
         {"max_ratio", num(rep.max_ratio)}, {"C", num(rep.constant)}, {"r_max", num(r_max)}};
  r.check("codim", "ratios bounded away from zero", true, !rep.samples.empty() && rep.min_ratio > 0, m);
  if (d.window().preset == "halfplane" && d.theta() == 1.0)
    r.check("codim", "flat edge ratios in [0.6, 1] with C <= 1.5", true,
            rep.min_ratio >= 0.6 && rep.max_ratio <= 1.0 && rep.constant <= 1.5, m);
}

double equivalence_constant(const Domain& d, const BesovParams& bp, std::uint64_t seed) {
  double c = 1.0;
  for (const auto& [name, f] : sample_family(d, Support::boundary, boundary_family(bounding_box(d), {4, 4, 4, seed}))) {
    const double a = besov_dyadic(f, d, bp).value;
    const double b = besov_double_integral(f, d, bp).value;
    const double e = besov_continuous(f, d, bp).value;
    c = std::max({c, drift(a, b), drift(a, e), drift(b, e)});
  }
  return c;
}

void suite_besov(const Domain& d, const Config& c, Report& r) {
  const BesovParams bp{alpha_of(c, d.theta()), c.p, c.base, std::nullopt, std::nullopt};
  const double c1 = equivalence_constant(d, bp, c.seed);
  r.check("besov-equiv", "forms agree within C_eq <= 4", true, c1 <= 4.0, {{"C_eq", num(c1)}});
  if (const auto fine = refined(d)) {
    const double c2 = equivalence_constant(*fine, bp, c.seed);
    r.check("besov-equiv", "C_eq stable under refinement", true, c2 / c1 >= 0.5 && c2 / c1 <= 2.0,
            {{"C_eq", num(c1)}, {"C_eq_refined", num(c2)}});
  }
}

std::vector<TestFunction> roundtrip_functions(const Box& b) {
  const double w = b.width(), xc = 0.5 * (b.x0 + b.x1);
  return {{"t", [](Point2 p) { return p.x; }},
          {"cos", [](Point2 p) { return std::cos(2 * std::numbers::pi * p.x); }},
          {"tent", [=](Point2 p) { return std::max(0.0, 1.0 - std::abs(p.x - xc) / (w / 8)); }}};
}

void suite_roundtrip(const Domain& d, Report& r) {
  const auto fs = roundtrip_functions(bounding_box(d));
  auto run = [&](const Domain& dom) {
    const auto cover = anchored_cover(dom);
    const auto pou = build_partition(cover, dom);
    const auto tp = default_trace_params(dom);
    std::vector<RoundtripReport> out;
    out.push_back(roundtrip_error(constant_field(dom, Support::boundary, 1.0), dom, cover, pou, tp));
    for (const auto& f : fs) out.push_back(roundtrip_error(make_field(dom, Support::boundary, f.fn), dom, cover, pou, tp));
    return out;
  };
  const auto coarse = run(d);
  json& sec = r.section("roundtrip");
  for (std::size_t k = 0; k < fs.size(); ++k)
    sec[fs[k].name] = {{"sup_err", num(coarse[k + 1].sup_err)}, {"lp_err", num(coarse[k + 1].lp_err)},
                       {"n_flagged", coarse[k + 1].n_flagged}};
  r.check("roundtrip", "constants reproduced", true, coarse[0].sup_err <= 1e-9, {{"sup_err", num(coarse[0].sup_err)}});
  r.check("roundtrip", "flagged balls below 1%", true, coarse[0].flagged_fraction < 0.01,
          {{"fraction", num(coarse[0].flagged_fraction)}});
  const auto fine_dom = refined(d);
  if (!fine_dom) return;
  const auto fine = run(*fine_dom);
  // the factor-1.5 decay is asserted on the flat edge; elsewhere it is reported
  const bool hard = d.window().preset == "halfplane";
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const double factor = coarse[k + 1].sup_err / fine[k + 1].sup_err;
    r.check("roundtrip", fs[k].name + " error shrinks by 1.5 under refinement", hard, factor >= 1.5,
            {{"sup_err", num(coarse[k + 1].sup_err)}, {"sup_err_refined", num(fine[k + 1].sup_err)},
             {"factor", num(factor)}});
  }
}

void suite_opnorm(const Domain& d, const Config& c, Report& r) {
  OperatorNormParams op;
  op.p = c.p;
  op.alpha = alpha_of(c, d.theta());
  op.dyadic_base = c.base;
  const FamilySpec spec{4, 4, 4, c.seed};
  auto run = [&](const Domain& dom) {
    const auto cover = anchored_cover(dom);
    const auto pou = build_partition(cover, dom);
    const Box box = bounding_box(dom);
    const auto bf = sample_family(dom, Support::boundary, boundary_family(box, spec));
    const auto uf = sample_family(dom, Support::interior, interior_family(box, spec));
    return std::pair{extension_norm(dom, cover, pou, bf, op), trace_norm(dom, uf, op)};
  };
  const auto [E, T] = run(d);
  json per = json::array();
  for (const auto* rep : {&E, &T})
    for (const auto& n : rep->per_function)
      per.push_back({{"op", rep->op}, {"name", n.name}, {"input", num(n.input_norm)}, {"output", num(n.output_norm)},
                     {"ratio", num(n.ratio)}});
  r.section("opnorm") = {{"K_E", num(E.K)}, {"K_T", num(T.K)}, {"per_function", per}};
  r.check("opnorm", "K_E and K_T finite", true, std::isfinite(E.K) && std::isfinite(T.K) && E.K > 0 && T.K > 0,
          {{"K_E", num(E.K)}, {"K_T", num(T.K)}});
  if (const auto fine = refined(d)) {
    const auto [E2, T2] = run(*fine);
    r.check("opnorm", "K_E and K_T change by at most 2x under refinement", true,
            drift(E.K, E2.K) <= 2.0 && drift(T.K, T2.K) <= 2.0,
            {{"K_E_refined", num(E2.K)}, {"K_T_refined", num(T2.K)}});
  }
}

void suite_cones(const Domain& d, const Config& c, Report& r) {
  const double h = d.resolution();
  const auto& bd = d.boundary();
  const std::size_t n = bd.size();
  const auto fam = sample_family(d, Support::interior, interior_family(bounding_box(d), {4, 4, 4, c.seed}));
  const auto tp = default_trace_params(d);
  std::vector<TraceResult> tr;
  std::vector<ScalarField> lips;
  for (const auto& [name, u] : fam) {
    tr.push_back(trace(u, d, tp));
    lips.push_back(local_lip(u, d, 2 * h));
  }
  ChainEstimateParams cp;
  cp.p = c.p;
  cp.lambda = c.tau;
  auto estimates = [&](std::size_t a, std::size_t b, const ConeChain& ch) {
    std::vector<ChainEstimate> out;
    for (std::size_t k = 0; k < fam.size(); ++k)
      if (tr[k].has_value[a] && tr[k].has_value[b])
        out.push_back(chain_oscillation_estimate(fam[k].second, tr[k], lips[k], ch, a, b, d, cp));
    return out;
  };

  // chains truncated to nothing below the grid carry no estimate
  std::vector<ChainEstimate> ref;
  for (auto [i, j] : {std::pair{n / 16, n / 4}, {n / 4, 3 * n / 8}, {3 * n / 8, 5 * n / 8}, {11 * n / 16, 15 * n / 16}}) {
    if (i == j) continue;
    const auto ch = build_cone_chain(d, uniform_curve(d, bd[i], bd[j]).curve, c.tau);
    if (ch.empty()) continue;
    const auto e = estimates(bd[i], bd[j], ch);
    ref.insert(ref.end(), e.begin(), e.end());
  }

  const Box box = bounding_box(d);
  const double gap = std::min(1.0, box.width() / 4);
  SplitMix64 rng(c.seed);
  double K = 0, worst = 0;
  int overlap = 0, n0 = 0;
  bool geometry = true;
  std::size_t pairs = 0, empty = 0;
  std::vector<std::vector<ChainEstimate>> sampled;
  for (int attempt = 0; pairs < 10 && attempt < 10000; ++attempt) {
    const std::size_t a = bd[rng.below(n)], b = bd[rng.below(n)];
    if (dist(d.space().point(a), d.space().point(b)) < gap) continue;
    ++pairs;
    const auto ch = build_cone_chain(d, uniform_curve(d, a, b).curve, c.tau);
    if (ch.empty()) {
      ++empty;
      continue;
    }
    const auto rep = verify_chain_properties(ch, d);
    geometry = geometry && rep.ok();
    K = std::max(K, rep.k_envelope);
    overlap = std::max(overlap, rep.overlap_max);
    n0 = std::max(n0, rep.n0);
    sampled.push_back(estimates(a, b, ch));
  }
  if (empty) r.warn(std::to_string(empty) + " of " + std::to_string(pairs) + " chains lie entirely below the grid cutoff");
  if (pairs == empty || ref.empty()) {
    r.warn("no resolvable cone chain at this resolution; chain checks skipped");
    return;
  }
  const double C = calibrate_chain_constant(ref);
  for (const auto& es : sampled)
    for (const auto& e : es) worst = std::max(worst, e.ratio(C));
  r.check("cones", "radius, consecutive-ball and decay properties", true, geometry,
          {{"chains", pairs - empty}, {"n0", n0}});
  r.check("cones", "dyadic envelope with K <= 64", true, K <= 64.0, {{"K", num(K)}});
  r.check("cones", "enlarged-ball overlap <= 32", true, overlap <= 32, {{"overlap_max", overlap}});
  r.check("cones", "oscillation bounded by calibrated estimate", true, worst <= 1.0,
          {{"C", num(C)}, {"max_ratio", num(worst)}});
}

// ---------------------------------------------------------------------------
// Commands

int cmd_build(const Config& c) {
  check_theta(c.theta, c.p);
  if (c.alpha) alpha_of(c, c.theta);
  const auto d = build_domain(c.preset, c.h, c.theta);
  emit(c.out, domain_to_json(d).dump(1) + "\n");
  std::FILE* log = (c.out.empty() || c.out == "-") ? stderr : stdout;
  std::fprintf(log, "%s: %zu sites, %zu boundary, %zu artificial, h=%g, theta=%g\n", c.preset.c_str(),
               d.space().size(), d.boundary().size(), d.artificial().size(), d.resolution(), d.theta());
  const double r_max = std::max(4 * d.resolution(), 1.0);
  json audit;
  try {
    const auto rep = check_codimension(d, codim_centers(d, r_max), codim_radii(d, r_max));
    std::fprintf(log, "codimension audit: %zu samples, ratio in [%.6g, %.6g], C = %.6g\n", rep.samples.size(),
                 rep.min_ratio, rep.max_ratio, rep.constant);
    audit = {{"samples", rep.samples.size()}, {"min_ratio", num(rep.min_ratio)}, {"max_ratio", num(rep.max_ratio)},
             {"C", num(rep.constant)}};
  } catch (const UsageError& e) {
    std::fprintf(log, "codimension audit skipped: %s\n", e.what());
  }
  if (!c.report.empty())
    write_text_file(c.report, json{{"sites", d.space().size()}, {"boundary_sites", d.boundary().size()},
                                   {"codimension", audit}}.dump(1) + "\n");
  return 0;
}

int cmd_verify(const Config& c) {
  static const std::set<std::string> suites{"whitney", "cones", "codim", "besov-equiv", "roundtrip", "opnorm", "all"};
  if (!suites.count(c.suite)) throw UsageError("unknown suite '" + c.suite + "'");
  const auto d = load_domain(c);
  check_theta(d.theta(), c.p);
  Report r;
  const bool all = c.suite == "all";
  if (all || c.suite == "whitney") suite_whitney(d, r);
  if (all || c.suite == "codim") suite_codim(d, r);
  if (all || c.suite == "besov-equiv") suite_besov(d, c, r);
  if (all || c.suite == "roundtrip") suite_roundtrip(d, r);
  if (all || c.suite == "opnorm") suite_opnorm(d, c, r);
  if (all || c.suite == "cones") suite_cones(d, c, r);
  const json j = r.to_json(d, c.suite);
  if (!c.report.empty()) write_text_file(c.report, j.dump(1) + "\n");
  std::printf("%s\n", r.failed() ? "verify: FAILED" : "verify: passed");
  return r.failed() ? kExitInvariant : 0;
}

int cmd_extend(const Config& c) {
  const auto d = load_domain(c);
  const auto f = field_from_csv(read_text_file(c.field_path), d, Support::boundary);
  const auto cover = anchored_cover(d);
  const auto F = extend(f, cover, build_partition(cover, d), d);
  emit(c.out, field_to_csv(F));
  if (!c.report.empty()) write_text_file(c.report, cover_to_json(cover).dump(1) + "\n");
  for (const auto& w : cover.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int cmd_trace(const Config& c) {
  const auto d = load_domain(c);
  const auto u = field_from_csv(read_text_file(c.field_path), d, Support::interior);
  const auto tp = default_trace_params(d);
  const auto t = trace(u, d, tp);
  emit(c.out, field_to_csv(t.values));
  if (t.missing) std::fprintf(stderr, "warning: %zu boundary sites without an admissible trace ball\n", t.missing);
  if (!c.report.empty())
    write_text_file(c.report, json{{"radii", tp.radii}, {"min_samples", tp.min_samples}, {"tolerance", num(tp.tolerance)},
                                   {"missing", t.missing}, {"unconverged", t.unconverged}}.dump(1) + "\n");
  return 0;
}

int cmd_besov(const Config& c) {
  const auto d = load_domain(c);
  if (c.theta_given) alpha_of(c, c.theta);
  const double alpha = c.alpha ? *c.alpha : 1.0 - d.theta() / c.p;
  const BesovParams bp{alpha, c.p, c.base, std::nullopt, std::nullopt};
  const auto f = field_from_csv(read_text_file(c.field_path), d, Support::boundary);
  BesovResult res;
  if (c.form == "dyadic") res = besov_dyadic(f, d, bp);
  else if (c.form == "integral") res = besov_double_integral(f, d, bp);
  else if (c.form == "continuous") res = besov_continuous(f, d, bp);
  else throw UsageError("unknown form '" + c.form + "' (dyadic, integral, continuous)");
  json levels = json::array();
  for (const auto& l : res.per_level) levels.push_back({{"level", l.level}, {"radius", num(l.radius)}, {"term", num(l.term)}});
  const json j{{"form", c.form}, {"alpha", num(alpha)}, {"p", num(c.p)}, {"value", num(res.value)},
               {"power", num(res.power)}, {"skipped", res.skipped}, {"per_level", levels}};
  emit(c.out, j.dump(1) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace and extension operators on sampled metric measure domains"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");
  Config c;

  auto common = [&](CLI::App* s) {
    s->set_help_flag("--help", "print help");
    s->add_option("--p", c.p, "integrability exponent")->capture_default_str();
    s->add_option("--alpha", c.alpha, "smoothness, must equal 1 - theta/p");
    s->add_option("--tau", c.tau, "chain dilation")->capture_default_str();
    s->add_option("--seed", c.seed, "seed for random test families")->capture_default_str();
    s->add_option("--threads", c.threads, "worker cap (0 = hardware)");
    s->add_option("--out", c.out, "output file (default stdout)");
    s->add_option("--report", c.report, "report JSON path");
  };
  auto domain_source = [&](CLI::App* s) {
    s->add_option("--preset", c.preset, "halfplane, square or lshape")->capture_default_str();
    s->add_option("--h", c.h, "grid spacing")->capture_default_str();
    s->add_option("--theta", c.theta, "codimension exponent")->capture_default_str()->each([&](const std::string&) {
      c.theta_given = true;
    });
  };

  auto* build = app.add_subcommand("build", "generate a preset domain");
  domain_source(build);
  common(build);

  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("domain", c.domain_path, "domain JSON (omit to use --preset)");
  verify->add_option("--suite", c.suite, "whitney, cones, codim, besov-equiv, roundtrip, opnorm or all")->capture_default_str();
  domain_source(verify);
  common(verify);

  auto* ext = app.add_subcommand("extend", "extend a boundary field CSV into the domain");
  ext->add_option("domain", c.domain_path, "domain JSON")->required();
  ext->add_option("field", c.field_path, "boundary field CSV")->required();
  common(ext);

  auto* tr = app.add_subcommand("trace", "trace of an interior field CSV");
  tr->add_option("domain", c.domain_path, "domain JSON")->required();
  tr->add_option("field", c.field_path, "interior field CSV")->required();
  common(tr);

  auto* bes = app.add_subcommand("besov", "Besov seminorm of a boundary field CSV");
  bes->add_option("domain", c.domain_path, "domain JSON")->required();
  bes->add_option("field", c.field_path, "boundary field CSV")->required();
  bes->add_option("--form", c.form, "dyadic, integral or continuous")->capture_default_str();
  bes->add_option("--base", c.base, "dyadic radius base C in C 2^l")->capture_default_str();
  bes->add_option("--theta", c.theta, "cross-check alpha = 1 - theta/p")->each([&](const std::string&) {
    c.theta_given = true;
  });
  common(bes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c.threads) set_max_threads(c.threads);
    if (!(c.tau >= 1.0)) throw UsageError("tau must be >= 1");
    if (*build) return cmd_build(c);
    if (*verify) return cmd_verify(c);
    if (*ext) return cmd_extend(c);
    if (*tr) return cmd_trace(c);
    if (*bes) return cmd_besov(c);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
