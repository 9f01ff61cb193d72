#pragma once

// Functional data substrate: time grids, sampled curves, L2(T) geometry and
// spatial sites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fkcp/error.hpp"

namespace fkcp {

/// Strictly increasing sample points spanning T = [a, b], with composite
/// trapezoid weights.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw InvalidArgument("time grid needs at least 2 points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i])) throw InvalidArgument("time grid point is not finite");
      if (i > 0 && !(points_[i] > points_[i - 1]))
        throw InvalidArgument("time grid must be strictly increasing");
    }
    weights_.assign(points_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const double half = 0.5 * (points_[i + 1] - points_[i]);
      weights_[i] += half;
      weights_[i + 1] += half;
    }
  }

  static std::shared_ptr<const TimeGrid> uniform(double a, double b, std::size_t n) {
    if (n < 2 || !(b > a)) throw InvalidArgument("uniform grid needs n >= 2 and b > a");
    std::vector<double> pts(n);
    for (std::size_t i = 0; i < n; ++i)
      pts[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return std::make_shared<const TimeGrid>(std::move(pts));
  }

  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return points_.size(); }
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }
  double length() const noexcept { return back() - front(); }
  double operator[](std::size_t i) const noexcept { return points_[i]; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.points_ == b.points_; }

  /// Trapezoid integral of samples on this grid.
  double integrate(std::span<const double> values) const {
    if (values.size() != points_.size()) throw GridMismatch();
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += weights_[i] * values[i];
    return s;
  }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

inline bool same_grid(const GridPtr& a, const GridPtr& b) {
  return a == b || (a && b && *a == *b);
}

/// A function on T represented by its samples on a shared TimeGrid.
class Curve {
 public:
  Curve() = default;
  Curve(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("curve without grid");
    if (values_.size() != grid_->size()) throw InvalidArgument("curve length differs from grid length");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("curve value is not finite");
  }

  static Curve constant(GridPtr grid, double c) {
    const std::size_t n = grid->size();
    return Curve(std::move(grid), std::vector<double>(n, c));
  }

  template <class F>
  static Curve tabulate(GridPtr grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
    return Curve(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }

  friend Curve operator+(const Curve& a, const Curve& b) { return zip(a, b, std::plus<>{}); }
  friend Curve operator-(const Curve& a, const Curve& b) { return zip(a, b, std::minus<>{}); }
  friend Curve operator*(double s, const Curve& a) {
    std::vector<double> v(a.values_);
    for (double& x : v) x *= s;
    return Curve(a.grid_, std::move(v));
  }
  friend Curve operator+(const Curve& a, double c) {
    std::vector<double> v(a.values_);
    for (double& x : v) x += c;
    return Curve(a.grid_, std::move(v));
  }

 private:
  template <class Op>
  static Curve zip(const Curve& a, const Curve& b, Op op) {
    if (!same_grid(a.grid_, b.grid_)) throw GridMismatch();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(a.values_[i], b.values_[i]);
    return Curve(a.grid_, std::move(v));
  }

  GridPtr grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const Curve& a, const Curve& b) {
  if (!same_grid(a.grid(), b.grid())) throw GridMismatch();
}

/// <a, b> = integral over T of a(t) b(t), composite trapezoid.
inline double l2_inner(const Curve& a, const Curve& b) {
  require_same_grid(a, b);
  const auto w = a.grid()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

/// ||a - b||^2 in L2(T).
inline double l2_dist_sq(const Curve& a, const Curve& b) {
  require_same_grid(a, b);
  const auto w = a.grid()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

struct Site {
  double u = 0.0;  // latitude or x
  double v = 0.0;  // longitude or y
  std::string id;
};

/// Euclidean distance in the (u, v) plane.
inline double spatial_dist(const Site& p, const Site& q) { return std::hypot(p.u - q.u, p.v - q.v); }

/// Sites paired with curves sampled on one shared grid.
class SpatialFunctionalDataset {
 public:
  SpatialFunctionalDataset(GridPtr grid, std::vector<Site> sites, std::vector<Curve> curves)
      : grid_(std::move(grid)), sites_(std::move(sites)), curves_(std::move(curves)) {
    if (!grid_) throw InvalidArgument("dataset without grid");
    if (sites_.empty() || sites_.size() != curves_.size())
      throw InvalidArgument("dataset needs the same positive number of sites and curves");
    std::set<std::string> ids;
    std::set<std::pair<double, double>> coords;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const Site& s = sites_[i];
      if (!std::isfinite(s.u) || !std::isfinite(s.v)) throw InvalidArgument("site coordinate is not finite");
      if (!ids.insert(s.id).second) throw InvalidArgument("duplicate site id '" + s.id + "'");
      if (!coords.insert({s.u, s.v}).second)
        throw InvalidArgument("duplicate site coordinates at '" + s.id + "'");
      if (!same_grid(curves_[i].grid(), grid_)) throw GridMismatch();
    }
  }

  const GridPtr& grid() const noexcept { return grid_; }
  std::span<const Site> sites() const noexcept { return sites_; }
  std::span<const Curve> curves() const noexcept { return curves_; }
  const Site& site(std::size_t i) const { return sites_.at(i); }
  const Curve& curve(std::size_t i) const { return curves_.at(i); }
  std::size_t size() const noexcept { return sites_.size(); }

  SpatialFunctionalDataset subset(std::span<const std::size_t> idx) const {
    std::vector<Site> s;
    std::vector<Curve> c;
    s.reserve(idx.size());
    c.reserve(idx.size());
    for (std::size_t i : idx) {
      s.push_back(sites_.at(i));
      c.push_back(curves_.at(i));
    }
    return {grid_, std::move(s), std::move(c)};
  }

  /// Everything except entry i.
  SpatialFunctionalDataset without(std::size_t i) const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < size(); ++k)
      if (k != i) idx.push_back(k);
    return subset(idx);
  }

  /// Lowest and highest sample over all curves.
  std::pair<double, double> value_range() const {
    double lo = curves_[0][0], hi = lo;
    for (const Curve& c : curves_) {
      lo = std::min(lo, c.min());
      hi = std::max(hi, c.max());
    }
    return {lo, hi};
  }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < sites_.size(); ++i)
      if (sites_[i].id == id) return i;
    throw InvalidArgument("unknown site id '" + id + "'");
  }

 private:
  GridPtr grid_;
  std::vector<Site> sites_;
  std::vector<Curve> curves_;
};

using Dataset = SpatialFunctionalDataset;

namespace detail {

/// p-th percentile (0..100) by linear interpolation between order statistics,
/// position p/100 * (n - 1).
inline double percentile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace detail

}  // namespace fkcp
