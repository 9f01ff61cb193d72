#pragma once

// Empirical trace-variogram estimation and parametric model fitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"

namespace fkcp {

struct VariogramBin {
  double lag = 0.0;        // bin centre
  double gamma = 0.0;      // (1 / 2N) * sum of ||X_i - X_j||^2
  std::size_t count = 0;   // N(h)
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;
  double max_lag = 0.0;
};

/// Pairwise spatial distances and squared L2 curve distances of a dataset.
struct PairwiseDistances {
  std::vector<double> spatial;  // row-major n x n
  std::vector<double> curve;    // row-major n x n
  std::size_t n = 0;

  explicit PairwiseDistances(const Dataset& data) : n(data.size()) {
    spatial.assign(n * n, 0.0);
    curve.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        spatial[i * n + j] = spatial[j * n + i] = spatial_dist(data.site(i), data.site(j));
        curve[i * n + j] = curve[j * n + i] = l2_dist_sq(data.curve(i), data.curve(j));
      }
  }

  double max_spatial() const {
    return spatial.empty() ? 0.0 : *std::max_element(spatial.begin(), spatial.end());
  }
};

/// Default lag cutoff: half of the largest pairwise site distance.
inline double default_max_lag(const Dataset& data) {
  double m = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = i + 1; j < data.size(); ++j) m = std::max(m, spatial_dist(data.site(i), data.site(j)));
  return 0.5 * m;
}

namespace detail {

// Bins (distance, squared curve distance) pairs into n_bins equal-width classes on [0, max_lag].
template <class PairVisitor>
EmpiricalVariogram bin_pairs(std::size_t n_bins, double max_lag, PairVisitor&& visit) {
  if (n_bins < 1) throw InvalidArgument("variogram needs at least one bin");
  if (!(max_lag > 0.0)) throw InvalidArgument("variogram max_lag must be positive");
  const double width = max_lag / static_cast<double>(n_bins);
  std::vector<double> sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  visit([&](double h, double d2) {
    if (h > max_lag) return;
    auto b = static_cast<std::size_t>(h / width);
    if (b >= n_bins) b = n_bins - 1;
    sum[b] += d2;
    ++count[b];
  });
  EmpiricalVariogram out;
  out.max_lag = max_lag;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    out.bins.push_back({(static_cast<double>(b) + 0.5) * width, sum[b] / (2.0 * static_cast<double>(count[b])), count[b]});
  }
  if (out.bins.empty()) throw EmptyVariogram("no site pair lies within max_lag");
  return out;
}

}  // namespace detail

/// gamma_hat(h) = (1 / 2N(h)) * sum over pairs in the lag class of ||X_i - X_j||^2.
/// `max_lag <= 0` selects half the largest site distance.
inline EmpiricalVariogram empirical_trace_variogram(const Dataset& data, std::size_t n_bins = 15,
                                                    double max_lag = 0.0) {
  if (data.size() < 2) throw InvalidArgument("variogram needs at least two sites");
  if (max_lag <= 0.0) max_lag = default_max_lag(data);
  return detail::bin_pairs(n_bins, max_lag, [&](auto&& add) {
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = i + 1; j < data.size(); ++j)
        add(spatial_dist(data.site(i), data.site(j)), l2_dist_sq(data.curve(i), data.curve(j)));
  });
}

/// Same estimator over the sub-multiset `idx` of a dataset whose pairwise
/// distances are cached; repeated indices are allowed (bootstrap resamples),
/// with `spatial_offset(a, b)` giving the distance between positions a and b.
inline EmpiricalVariogram empirical_trace_variogram(const PairwiseDistances& pd, std::span<const std::size_t> idx,
                                                    const std::function<double(std::size_t, std::size_t)>& spatial,
                                                    std::size_t n_bins, double max_lag) {
  if (idx.size() < 2) throw InvalidArgument("variogram needs at least two sites");
  return detail::bin_pairs(n_bins, max_lag, [&](auto&& add) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) add(spatial(a, b), pd.curve[idx[a] * pd.n + idx[b]]);
  });
}

enum class VariogramFamily { exponential, spherical };

inline std::string to_string(VariogramFamily f) {
  return f == VariogramFamily::exponential ? "exponential" : "spherical";
}

inline VariogramFamily parse_family(const std::string& s) {
  if (s == "exponential") return VariogramFamily::exponential;
  if (s == "spherical") return VariogramFamily::spherical;
  throw InvalidArgument("unknown variogram family '" + s + "'");
}

/// gamma(h) = nugget + partial_sill * g(h / range).
struct VariogramModel {
  VariogramFamily family = VariogramFamily::exponential;
  double nugget = 0.0;
  double partial_sill = 1.0;
  double range = 1.0;

  void validate() const {
    if (!(nugget >= 0.0) || !(partial_sill > 0.0) || !(range > 0.0) || !std::isfinite(nugget) ||
        !std::isfinite(partial_sill) || !std::isfinite(range))
      throw InvalidArgument("variogram model needs nugget >= 0, partial_sill > 0, range > 0");
  }
};

/// Model value at lag h >= 0. At h = 0 this is the nugget; kriging assembly
/// uses 0 on its own diagonal.
inline double eval_model(const VariogramModel& m, double h) {
  if (h < 0.0 || std::isnan(h)) throw InvalidArgument("variogram lag must be non-negative");
  const double x = h / m.range;
  double g = 0.0;
  switch (m.family) {
    case VariogramFamily::exponential:
      g = -std::expm1(-x);
      break;
    case VariogramFamily::spherical:
      g = x >= 1.0 ? 1.0 : 1.5 * x - 0.5 * x * x * x;
      break;
  }
  return m.nugget + m.partial_sill * g;
}

/// Weighted least squares criterion sum N(h) (gamma_hat - gamma(h))^2 / gamma(h)^2.
inline double wls_objective(const EmpiricalVariogram& emp, const VariogramModel& m) {
  double s = 0.0;
  for (const auto& bin : emp.bins) {
    const double g = eval_model(m, bin.lag);
    if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = bin.gamma - g;
    s += static_cast<double>(bin.count) * r * r / (g * g);
  }
  return s;
}

struct FitOptions {
  VariogramFamily family = VariogramFamily::exponential;
  std::size_t n_bins = 15;
  double max_lag = 0.0;  // <= 0: half the largest pair distance
  int max_iter = 4000;
};

/// Parameter box used by the fitter, in natural units.
struct FitBounds {
  double nugget_floor, nugget_max;
  double sill_floor, sill_max;
  double range_min, range_max;

  static FitBounds from(const EmpiricalVariogram& emp) {
    double mean = 0.0, mx = 0.0;
    for (const auto& b : emp.bins) {
      mean += b.gamma;
      mx = std::max(mx, b.gamma);
    }
    mean /= static_cast<double>(emp.bins.size());
    return {1e-10 * mean, 2.0 * mx, 1e-10 * mean, 10.0 * mx, emp.bins.front().lag / 3.0, 100.0 * emp.max_lag};
  }
};

namespace detail {

struct FitProblem {
  const EmpiricalVariogram* emp;
  FitBounds box;
  VariogramFamily family;

  VariogramModel decode(const double* x) const {
    VariogramModel m;
    m.family = family;
    m.nugget = std::clamp(std::exp(x[0]), box.nugget_floor, box.nugget_max);
    m.partial_sill = std::clamp(std::exp(x[1]), box.sill_floor, box.sill_max);
    m.range = std::clamp(std::exp(x[2]), box.range_min, box.range_max);
    return m;
  }

  static double eval(const gsl_vector* v, void* self) {
    const auto* p = static_cast<const FitProblem*>(self);
    const double x[3] = {gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2)};
    for (double xi : x)
      if (!std::isfinite(xi)) return std::numeric_limits<double>::max();
    const double f = wls_objective(*p->emp, p->decode(x));
    if (!std::isfinite(f)) return std::numeric_limits<double>::max();
    // outside the box the clamped objective is flat; pull the simplex back
    const double lo[3] = {std::log(p->box.nugget_floor), std::log(p->box.sill_floor), std::log(p->box.range_min)};
    const double hi[3] = {std::log(p->box.nugget_max), std::log(p->box.sill_max), std::log(p->box.range_max)};
    double excess = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double e = x[k] < lo[k] ? lo[k] - x[k] : (x[k] > hi[k] ? x[k] - hi[k] : 0.0);
      excess += e * e;
    }
    return f + excess;
  }
};

inline bool model_less(const VariogramModel& a, double fa, const VariogramModel& b, double fb) {
  if (fa != fb) return fa < fb;
  return std::tie(a.nugget, a.partial_sill, a.range) < std::tie(b.nugget, b.partial_sill, b.range);
}

}  // namespace detail

struct FitResult {
  VariogramModel model;
  double objective = 0.0;
  std::vector<VariogramModel> starts;
  std::vector<double> start_objectives;
};

/// Multi-start Nelder-Mead minimisation of the WLS criterion over log-parameters.
/// Starts: nugget in {0, mean/2}, sill in {mean, max}, range in
/// {max_lag/4, max_lag/2, max_lag}; ties broken lexicographically.
inline FitResult fit_model_detailed(const EmpiricalVariogram& emp, VariogramFamily family = VariogramFamily::exponential,
                                    int max_iter = 4000) {
  if (emp.bins.size() < 3)
    throw InvalidArgument("variogram fit needs at least 3 non-empty bins, got " + std::to_string(emp.bins.size()));
  double mean = 0.0, mx = 0.0;
  for (const auto& b : emp.bins) {
    mean += b.gamma;
    mx = std::max(mx, b.gamma);
  }
  mean /= static_cast<double>(emp.bins.size());
  if (!(mx > 0.0)) throw DegenerateFit("all empirical variogram values are zero (identical curves?)");

  detail::FitProblem prob{&emp, FitBounds::from(emp), family};
  gsl_set_error_handler_off();

  FitResult out;
  bool have_best = false;
  double best_f = 0.0;
  VariogramModel best;

  const std::array<double, 2> nuggets{0.0, 0.5 * mean};
  const std::array<double, 2> sills{mean, mx};
  const std::array<double, 3> ranges{emp.max_lag / 4.0, emp.max_lag / 2.0, emp.max_lag};

  gsl_multimin_function fn{&detail::FitProblem::eval, 3, &prob};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);

  auto run_from = [&](const double start[3]) {
    for (int k = 0; k < 3; ++k) {
      gsl_vector_set(x, static_cast<std::size_t>(k), start[k]);
      gsl_vector_set(step, static_cast<std::size_t>(k), 0.5);
    }
    gsl_multimin_fminimizer_set(solver, &fn, x, step);
    double best_seen = std::numeric_limits<double>::infinity();
    int last_gain = 0;
    for (int it = 0; it < max_iter; ++it) {
      if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-9) == GSL_SUCCESS) break;
      const double f = gsl_multimin_fminimizer_minimum(solver);
      if (f < best_seen - 1e-13 * (1.0 + std::fabs(f))) {
        best_seen = f;
        last_gain = it;
      } else if (it - last_gain > 200) {
        break;  // stalled, e.g. pinned against a bound
      }
    }
    const gsl_vector* xm = gsl_multimin_fminimizer_x(solver);
    return std::array<double, 3>{gsl_vector_get(xm, 0), gsl_vector_get(xm, 1), gsl_vector_get(xm, 2)};
  };

  for (double n0 : nuggets)
    for (double s0 : sills)
      for (double r0 : ranges) {
        const double start[3] = {std::log(std::max(n0, prob.box.nugget_floor)), std::log(s0), std::log(r0)};
        const VariogramModel m0 = prob.decode(start);
        out.starts.push_back(m0);
        out.start_objectives.push_back(wls_objective(emp, m0));

        // one restart from the converged point guards against simplex collapse
        auto xm = run_from(start);
        xm = run_from(xm.data());
        const VariogramModel m = prob.decode(xm.data());
        const double f = wls_objective(emp, m);
        if (!have_best || detail::model_less(m, f, best, best_f)) {
          best = m;
          best_f = f;
          have_best = true;
        }
      }

  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(x);

  // a nugget sitting on its positivity floor is reported as zero
  if (best.nugget <= prob.box.nugget_floor * (1.0 + 1e-9)) {
    VariogramModel zeroed = best;
    zeroed.nugget = 0.0;
    const double fz = wls_objective(emp, zeroed);
    if (fz <= best_f) {
      best = zeroed;
      best_f = fz;
    }
  }
  out.model = best;
  out.objective = best_f;
  return out;
}

inline VariogramModel fit_model(const EmpiricalVariogram& emp, VariogramFamily family = VariogramFamily::exponential) {
  return fit_model_detailed(emp, family).model;
}

}  // namespace fkcp
