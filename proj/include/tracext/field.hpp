#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"

namespace tracext {

enum class Support { interior, boundary, both };
enum class Provenance { input, extension, trace, gradient_surrogate };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::input: return "input";
    case Provenance::extension: return "extension";
    case Provenance::trace: return "trace";
    case Provenance::gradient_surrogate: return "gradient-surrogate";
  }
  return "?";
}

// Values indexed by site of the domain's space. Sites outside the support hold NaN.
struct ScalarField {
  std::vector<double> values;
  Support support = Support::interior;
  Provenance provenance = Provenance::input;

  double operator[](std::size_t site) const { return values[site]; }
  double& operator[](std::size_t site) { return values[site]; }
  std::size_t size() const { return values.size(); }
};

inline bool in_support(const Domain& dom, Support s, std::size_t site) {
  return s == Support::both || (s == Support::interior) == dom.is_interior(site);
}

inline ScalarField make_field(const Domain& dom, Support support,
                              const std::function<double(Point2)>& fn,
                              Provenance prov = Provenance::input) {
  ScalarField f;
  f.support = support;
  f.provenance = prov;
  f.values.assign(dom.space().size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < dom.space().size(); ++s)
    if (in_support(dom, support, s)) f.values[s] = fn(dom.space().point(s));
  return f;
}

inline ScalarField constant_field(const Domain& dom, Support support, double c) {
  ScalarField f;
  f.support = support;
  f.values.assign(dom.space().size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < dom.space().size(); ++s)
    if (in_support(dom, support, s)) f.values[s] = c;
  return f;
}

// Throws unless the field matches the domain and is finite on its support.
inline void check_field(const ScalarField& f, const Domain& dom, Support need, const char* what) {
  if (f.values.size() != dom.space().size())
    throw DataError(std::string(what) + ": field size does not match the domain");
  for (std::size_t s = 0; s < f.values.size(); ++s) {
    if (!in_support(dom, need, s)) continue;
    if (!std::isfinite(f.values[s]))
      throw DataError(std::string(what) + ": non-finite value at site " + std::to_string(s));
  }
}

// Values at the boundary sites in boundary() order (the indexing of boundary_space()).
inline std::vector<double> boundary_values(const ScalarField& f, const Domain& dom) {
  check_field(f, dom, Support::boundary, "boundary field");
  std::vector<double> out;
  out.reserve(dom.boundary().size());
  for (std::size_t b : dom.boundary()) out.push_back(f.values[b]);
  return out;
}

inline ScalarField linear_combination(double a, const ScalarField& f, double b, const ScalarField& g) {
  if (f.size() != g.size()) throw DataError("field size mismatch");
  ScalarField out = f;
  for (std::size_t s = 0; s < f.size(); ++s) out.values[s] = a * f.values[s] + b * g.values[s];
  return out;
}

}  // namespace tracext
