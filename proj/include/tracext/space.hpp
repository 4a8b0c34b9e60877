#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace tracext {

enum class MetricKind { euclidean_2d, table };

inline const char* to_string(MetricKind k) {
  return k == MetricKind::euclidean_2d ? "euclidean-2d" : "table";
}

// Open ball B(center, radius); tau-dilation keeps the center and scales the radius.
struct Ball {
  Point2 center;
  double radius = 0.0;

  Ball dilate(double tau) const { return {center, tau * radius}; }
  bool contains(Point2 p) const { return dist(center, p) < radius; }
};

// Uniform bucket grid over planar sites. Range queries are exact: every candidate in the
// touched buckets is tested against the open-ball predicate.
class GridIndex {
 public:
  GridIndex() = default;

  explicit GridIndex(const std::vector<Point2>& pts) {
    if (pts.empty()) return;
    xmin_ = xmax_ = pts[0].x;
    ymin_ = ymax_ = pts[0].y;
    for (const auto& p : pts) {
      xmin_ = std::min(xmin_, p.x);
      xmax_ = std::max(xmax_, p.x);
      ymin_ = std::min(ymin_, p.y);
      ymax_ = std::max(ymax_, p.y);
    }
    const double w = std::max(xmax_ - xmin_, 1e-300);
    const double hgt = std::max(ymax_ - ymin_, 1e-300);
    // About four sites per bucket on a uniform layout.
    cell_ = std::sqrt(w * hgt * 4.0 / static_cast<double>(pts.size()));
    if (!(cell_ > 0.0) || !std::isfinite(cell_)) cell_ = std::max(w, hgt);
    nx_ = static_cast<std::size_t>(w / cell_) + 1;
    ny_ = static_cast<std::size_t>(hgt / cell_) + 1;
    std::vector<std::size_t> counts(nx_ * ny_ + 1, 0);
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = cell_id(pts[i]);
      ++counts[cell_of[i] + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    start_ = counts;
    items_.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) items_[counts[cell_of[i]]++] = i;
  }

  template <class Fn>
  void for_each_candidate(Point2 c, double r, Fn&& fn) const {
    if (items_.empty()) return;
    const auto clampi = [](double v, std::size_t n) -> std::size_t {
      if (!(v > 0.0)) return 0;
      return std::min(n - 1, static_cast<std::size_t>(v));
    };
    const std::size_t ix0 = clampi((c.x - r - xmin_) / cell_, nx_);
    const std::size_t ix1 = clampi((c.x + r - xmin_) / cell_, nx_);
    const std::size_t iy0 = clampi((c.y - r - ymin_) / cell_, ny_);
    const std::size_t iy1 = clampi((c.y + r - ymin_) / cell_, ny_);
    if (c.x + r < xmin_ || c.x - r > xmax_ || c.y + r < ymin_ || c.y - r > ymax_) return;
    for (std::size_t iy = iy0; iy <= iy1; ++iy) {
      for (std::size_t ix = ix0; ix <= ix1; ++ix) {
        const std::size_t id = iy * nx_ + ix;
        for (std::size_t k = start_[id]; k < start_[id + 1]; ++k) fn(items_[k]);
      }
    }
  }

 private:
  std::size_t cell_id(Point2 p) const {
    const auto ix = std::min(nx_ - 1, static_cast<std::size_t>((p.x - xmin_) / cell_));
    const auto iy = std::min(ny_ - 1, static_cast<std::size_t>((p.y - ymin_) / cell_));
    return iy * nx_ + ix;
  }

  double xmin_ = 0, xmax_ = 0, ymin_ = 0, ymax_ = 0, cell_ = 1;
  std::size_t nx_ = 1, ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

// Finite weighted point cloud (Z, d, mu): planar sites with the Euclidean metric, or an
// explicit symmetric distance table. Immutable once built.
class SampledSpace {
 public:
  SampledSpace() = default;

  static SampledSpace euclidean(std::vector<Point2> points, std::vector<double> weights) {
    if (points.size() != weights.size())
      throw DataError("weights length " + std::to_string(weights.size()) +
                      " does not match site count " + std::to_string(points.size()));
    SampledSpace s;
    s.kind_ = MetricKind::euclidean_2d;
    s.points_ = std::move(points);
    s.weights_ = std::move(weights);
    s.finish();
    s.index_ = GridIndex(s.points_);
    return s;
  }

  static SampledSpace from_table(const std::vector<std::vector<double>>& table,
                                 std::vector<double> weights) {
    const std::size_t n = table.size();
    for (const auto& row : table)
      if (row.size() != n) throw DataError("distance table is not square");
    if (weights.size() != n)
      throw DataError("weights length " + std::to_string(weights.size()) +
                      " does not match table size " + std::to_string(n));
    SampledSpace s;
    s.kind_ = MetricKind::table;
    s.table_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (table[i][i] != 0.0) throw DataError("distance table has a nonzero diagonal entry");
      for (std::size_t j = 0; j < n; ++j) {
        const double a = table[i][j];
        if (!(a >= 0.0) || !std::isfinite(a)) throw DataError("distance table entry is negative or non-finite");
        if (a != table[j][i])
          throw DataError("distance table is asymmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
        s.table_[i * n + j] = a;
      }
    }
    s.weights_ = std::move(weights);
    s.finish();
    return s;
  }

  MetricKind metric_kind() const { return kind_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double total_mass() const { return total_mass_; }
  bool has_coordinates() const { return kind_ == MetricKind::euclidean_2d; }

  const std::vector<Point2>& points() const { return points_; }
  Point2 point(std::size_t i) const {
    require_coordinates();
    return points_[i];
  }

  double distance(std::size_t i, std::size_t j) const {
    if (kind_ == MetricKind::table) return table_[i * size() + j];
    return dist(points_[i], points_[j]);
  }

  double distance(Point2 p, std::size_t j) const {
    require_coordinates();
    return dist(p, points_[j]);
  }

  // Calls fn(i, d) for every site with d(center, p_i) < r. Unordered.
  template <class Fn>
  void for_each_in_ball(std::size_t center, double r, Fn&& fn) const {
    check_radius(r);
    if (kind_ == MetricKind::table) {
      const double* row = &table_[center * size()];
      for (std::size_t i = 0; i < size(); ++i)
        if (row[i] < r) fn(i, row[i]);
      return;
    }
    for_each_in_ball(points_[center], r, fn);
  }

  template <class Fn>
  void for_each_in_ball(Point2 c, double r, Fn&& fn) const {
    check_radius(r);
    require_coordinates();
    index_.for_each_candidate(c, r, [&](std::size_t i) {
      const double d = dist(c, points_[i]);
      if (d < r) fn(i, d);
    });
  }

  std::vector<std::size_t> ball_query(std::size_t center, double r) const {
    std::vector<std::size_t> out;
    for_each_in_ball(center, r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::size_t> ball_query(Point2 c, double r) const {
    std::vector<std::size_t> out;
    for_each_in_ball(c, r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

  // Sum of weights over an index set, accumulated in the order given.
  double measure_of(std::span<const std::size_t> sites) const {
    double m = 0.0;
    for (std::size_t i : sites) {
      if (i >= size()) throw UsageError("site index " + std::to_string(i) + " out of range");
      m += weights_[i];
    }
    return m;
  }

  double ball_mass(std::size_t center, double r) const { return measure_of(ball_query(center, r)); }
  double ball_mass(Point2 c, double r) const { return measure_of(ball_query(c, r)); }

  // Restriction to a subset of sites with new weights (e.g. the boundary with nu).
  SampledSpace subspace(std::span<const std::size_t> sites, std::vector<double> weights) const {
    if (weights.size() != sites.size()) throw DataError("subspace weight count mismatch");
    if (kind_ == MetricKind::euclidean_2d) {
      std::vector<Point2> pts;
      pts.reserve(sites.size());
      for (std::size_t i : sites) pts.push_back(points_.at(i));
      return euclidean(std::move(pts), std::move(weights));
    }
    std::vector<std::vector<double>> t(sites.size(), std::vector<double>(sites.size()));
    for (std::size_t a = 0; a < sites.size(); ++a)
      for (std::size_t b = 0; b < sites.size(); ++b) t[a][b] = distance(sites[a], sites[b]);
    return from_table(t, std::move(weights));
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) d = std::max(d, distance(i, j));
    return d;
  }

  // Smallest positive inter-site distance.
  double min_spacing() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) {
        const double d = distance(i, j);
        if (d > 0.0) m = std::min(m, d);
      }
    return m;
  }

 private:
  void finish() {
    if (weights_.size() < 2) throw DataError("a sampled space needs at least 2 sites");
    total_mass_ = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("negative or non-finite weight");
      total_mass_ += w;
    }
    if (!(total_mass_ > 0.0)) throw DataError("total mass must be positive");
  }

  static void check_radius(double r) {
    if (!(r > 0.0)) throw UsageError("ball radius must be positive");
  }

  void require_coordinates() const {
    if (kind_ != MetricKind::euclidean_2d)
      throw UsageError("operation needs planar coordinates; space uses an explicit table");
  }

  MetricKind kind_ = MetricKind::euclidean_2d;
  std::vector<Point2> points_;
  std::vector<double> table_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
  GridIndex index_;
};

// Largest violation d(a,c) - d(a,b) - d(b,c) over pseudo-random triples (0 when the
// triangle inequality holds on the sample).
template <class Rng>
double triangle_violation(const SampledSpace& s, std::size_t triples, Rng& rng) {
  double worst = 0.0;
  const std::size_t n = s.size();
  for (std::size_t t = 0; t < triples; ++t) {
    const std::size_t a = rng.below(n), b = rng.below(n), c = rng.below(n);
    worst = std::max(worst, s.distance(a, c) - s.distance(a, b) - s.distance(b, c));
  }
  return worst;
}

struct DoublingSample {
  std::size_t center = 0;
  double radius = 0.0;
  double ratio = 0.0;
};

struct DoublingReport {
  double estimate = 0.0;
  DoublingSample witness;
  std::vector<DoublingSample> samples;
  std::vector<DoublingSample> skipped;  // inner ball empty
};

// max over sampled (z, r) of mu(B(z,2r)) / mu(B(z,r)).
inline DoublingReport estimate_doubling_constant(const SampledSpace& s,
                                                 std::span<const std::size_t> centers,
                                                 std::span<const double> radii) {
  DoublingReport rep;
  for (std::size_t z : centers) {
    for (double r : radii) {
      const double inner = s.ball_mass(z, r);
      if (!(inner > 0.0)) {
        rep.skipped.push_back({z, r, 0.0});
        continue;
      }
      const double ratio = s.ball_mass(z, 2.0 * r) / inner;
      rep.samples.push_back({z, r, ratio});
      if (ratio > rep.estimate) {
        rep.estimate = ratio;
        rep.witness = rep.samples.back();
      }
    }
  }
  return rep;
}

}  // namespace tracext
