#pragma once

// Band evaluation: width, interval score, global and local coverage, timing.

#include <chrono>
#include <span>
#include <vector>

#include "fkcp/conformal.hpp"
#include "fkcp/fdata.hpp"

namespace fkcp {

/// Width = integral of (upper - lower) over T.
inline double band_width(const PredictionBand& band) {
  std::vector<double> d(band.center.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = band.upper[k] - band.lower[k];
  return band.center.grid()->integrate(d);
}

/// S_alpha = integral of (u - l) + 2/alpha (l - x)_+ + 2/alpha (x - u)_+.
inline double band_score(const PredictionBand& band, const Curve& truth, double alpha) {
  require_same_grid(band.center, truth);
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const double k = 2.0 / alpha;
  std::vector<double> a(truth.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double l = band.lower[i], u = band.upper[i], x = truth[i];
    a[i] = (u - l) + k * std::max(l - x, 0.0) + k * std::max(x - u, 0.0);
  }
  return truth.grid()->integrate(a);
}

struct BandTruth {
  const PredictionBand* band;
  const Curve* truth;
};

/// Percentage of truths lying inside their band at every grid point (bounds inclusive).
inline double global_coverage(std::span<const BandTruth> items) {
  if (items.empty()) throw InvalidArgument("coverage of an empty set");
  std::size_t inside = 0;
  for (const auto& it : items) inside += it.band->contains(*it.truth) ? 1 : 0;
  return 100.0 * static_cast<double>(inside) / static_cast<double>(items.size());
}

/// Cov_L(t) = (1/N) sum_i 1(l_i(t) <= X_i(t) <= u_i(t)).
inline Curve local_coverage(std::span<const BandTruth> items) {
  if (items.empty()) throw InvalidArgument("coverage of an empty set");
  const Curve& first = *items.front().truth;
  std::vector<double> c(first.size(), 0.0);
  for (const auto& it : items) {
    require_same_grid(first, *it.truth);
    require_same_grid(first, it.band->center);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double x = (*it.truth)[k];
      c[k] += (it.band->lower[k] <= x && x <= it.band->upper[k]) ? 1.0 : 0.0;
    }
  }
  for (double& v : c) v /= static_cast<double>(items.size());
  return Curve(first.grid(), std::move(c));
}

/// Time-average of a local coverage curve in percent (trapezoid over T).
inline double mean_local_coverage(const Curve& cov) {
  return 100.0 * cov.grid()->integrate(cov.values()) / cov.grid()->length();
}

/// Total time and mono time (total / number of target curves).
class TimingAccumulator {
 public:
  void add(double seconds) {
    total_ += seconds;
    max_ = std::max(max_, seconds);
    ++count_;
  }
  double total() const noexcept { return total_; }
  double mono() const noexcept { return count_ ? total_ / static_cast<double>(count_) : 0.0; }
  double max_single() const noexcept { return max_; }
  std::size_t count() const noexcept { return count_; }

 private:
  double total_ = 0.0;
  double max_ = 0.0;
  std::size_t count_ = 0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace fkcp
