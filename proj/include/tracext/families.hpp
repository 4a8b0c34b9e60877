#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "domain.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "random.hpp"

namespace tracext {

struct TestFunction {
  std::string name;
  std::function<double(Point2)> fn;
};

struct FamilySpec {
  int modes = 4;   // cos(2 pi k x / W), k = 1..modes
  int tents = 4;
  int random = 4;  // seeded piecewise-linear Lipschitz fields
  std::uint64_t seed = 1;
};

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

inline Box bounding_box(const Domain& dom) {
  if (!dom.window().has_geometry()) throw UsageError("test families need a planar window");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box b{inf, inf, -inf, -inf};
  for (Point2 v : dom.window().polygon) {
    b.x0 = std::min(b.x0, v.x);
    b.y0 = std::min(b.y0, v.y);
    b.x1 = std::max(b.x1, v.x);
    b.y1 = std::max(b.y1, v.y);
  }
  return b;
}

namespace detail {

// Bilinear interpolation of seeded knot values on an (nx+1) x (ny+1) lattice over the box.
inline std::function<double(Point2)> random_lattice(const Box& box, int nx, int ny, SplitMix64 rng) {
  std::vector<double> knots(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (double& v : knots) v = rng.uniform(-1.0, 1.0);
  return [box, nx, ny, knots](Point2 p) {
    const double gx = std::clamp((p.x - box.x0) / box.width() * nx, 0.0, double(nx));
    const double gy = ny == 0 ? 0.0 : std::clamp((p.y - box.y0) / box.height() * ny, 0.0, double(ny));
    const int ix = std::min(static_cast<int>(gx), nx - 1);
    const int iy = ny == 0 ? 0 : std::min(static_cast<int>(gy), ny - 1);
    const double tx = gx - ix, ty = gy - iy;
    auto at = [&](int i, int j) { return knots[static_cast<std::size_t>(j * (nx + 1) + i)]; };
    if (ny == 0) return (1 - tx) * at(ix, 0) + tx * at(ix + 1, 0);
    return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
           (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
  };
}

}  // namespace detail

// Boundary data: cosine modes along x, tents in x, random piecewise-linear profiles in x.
inline std::vector<TestFunction> boundary_family(const Box& box, const FamilySpec& spec) {
  std::vector<TestFunction> out;
  const double W = box.width();
  for (int k = 1; k <= spec.modes; ++k)
    out.push_back({"cos" + std::to_string(k), [=](Point2 p) {
                     return std::cos(2.0 * std::numbers::pi * k * (p.x - box.x0) / W);
                   }});
  for (int j = 0; j < spec.tents; ++j) {
    const double c = box.x0 + W * (j + 1) / (spec.tents + 1);
    const double w = W / 4.0;
    out.push_back({"tent" + std::to_string(j + 1),
                   [=](Point2 p) { return std::max(0.0, 1.0 - std::abs(p.x - c) / w); }});
  }
  SplitMix64 rng(spec.seed);
  for (int j = 0; j < spec.random; ++j)
    out.push_back({"lip" + std::to_string(j + 1), [g = detail::random_lattice(box, 16, 0, rng.split())](
                                                      Point2 p) { return g({p.x, 0.0}); }});
  return out;
}

// Interior data: the same cosine modes, radial cones at boundary points, random bilinear fields.
inline std::vector<TestFunction> interior_family(const Box& box, const FamilySpec& spec) {
  std::vector<TestFunction> out;
  const double W = box.width();
  for (int k = 1; k <= spec.modes; ++k)
    out.push_back({"cos" + std::to_string(k), [=](Point2 p) {
                     return std::cos(2.0 * std::numbers::pi * k * (p.x - box.x0) / W);
                   }});
  for (int j = 0; j < spec.tents; ++j) {
    const Point2 c{box.x0 + W * (j + 1) / (spec.tents + 1), box.y0};
    const double w = W / 4.0;
    out.push_back({"cone" + std::to_string(j + 1),
                   [=](Point2 p) { return std::max(0.0, 1.0 - dist(p, c) / w); }});
  }
  SplitMix64 rng(spec.seed ^ 0x5bd1e995u);
  const int ny = std::max(1, static_cast<int>(std::lround(16.0 * box.height() / W)));
  for (int j = 0; j < spec.random; ++j)
    out.push_back({"lip" + std::to_string(j + 1), detail::random_lattice(box, 16, ny, rng.split())});
  return out;
}

inline std::vector<std::pair<std::string, ScalarField>> sample_family(
    const Domain& dom, Support support, const std::vector<TestFunction>& fam) {
  std::vector<std::pair<std::string, ScalarField>> out;
  for (const auto& t : fam) out.emplace_back(t.name, make_field(dom, support, t.fn));
  return out;
}

}  // namespace tracext
