#pragma once

#include <cmath>
#include <stdexcept>

#include <tracext/domain.hpp>

inline std::size_t site_at(const tracext::Domain& d, double x, double y) {
  const auto& pts = d.space().points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::abs(pts[i].x - x) < 1e-12 && std::abs(pts[i].y - y) < 1e-12) return i;
  throw std::out_of_range("no site at the requested coordinates");
}
