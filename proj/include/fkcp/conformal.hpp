#pragma once

// Split conformal prediction bands around functional ordinary kriging
// predictions: proximity split, surrogate predictions, modulation functions,
// nonconformity scores and the band radius.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"
#include "fkcp/kriging.hpp"
#include "fkcp/variogram.hpp"

namespace fkcp {

enum class Modulation { sup, sqrt };
enum class Score { sup, sqrt };

/// One of the twelve cases (proximity percentile x modulation x score) plus alpha
/// and numerical settings.
struct CaseConfig {
  double alpha = 0.25;
  int delta_percentile = 50;
  Modulation modulation = Modulation::sqrt;
  Score score = Score::sup;
  std::optional<double> epsilon_floor;  // default 1e-8 * dataset value range
  bool score_sqrt_squared_denominator = false;
  SolverSettings solver;
  FitOptions fit;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (delta_percentile != 25 && delta_percentile != 50 && delta_percentile != 75)
      throw InvalidArgument("delta percentile must be 25, 50 or 75");
    if (epsilon_floor && !(*epsilon_floor > 0.0)) throw InvalidArgument("epsilon floor must be positive");
  }
};

inline std::string case_label(int delta, Modulation s, Score d) {
  return "\xCE\x94" + std::to_string(delta) + (s == Modulation::sup ? ",Ssup" : ",Ssqrt") +
         (d == Score::sup ? ",Dsup" : ",Dsqrt");
}

inline std::string case_label(const CaseConfig& c) { return case_label(c.delta_percentile, c.modulation, c.score); }

/// Parses "Δ50,Ssqrt,Dsup" (the leading Δ, "D" or "delta" is optional).
inline void parse_case(const std::string& text, CaseConfig& cfg) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.push_back(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) throw InvalidArgument("case must look like \xCE\x94" "50,Ssqrt,Dsup, got '" + text + "'");
  std::string d = parts[0];
  for (const char* prefix : {"\xCE\x94", "delta", "Delta", "D", "d"})
    if (d.rfind(prefix, 0) == 0) {
      d = d.substr(std::string(prefix).size());
      break;
    }
  if (d == "25" || d == "50" || d == "75")
    cfg.delta_percentile = std::stoi(d);
  else
    throw InvalidArgument("unknown proximity threshold in case '" + text + "'");
  if (parts[1] == "Ssup") cfg.modulation = Modulation::sup;
  else if (parts[1] == "Ssqrt") cfg.modulation = Modulation::sqrt;
  else throw InvalidArgument("unknown modulation in case '" + text + "'");
  if (parts[2] == "Dsup") cfg.score = Score::sup;
  else if (parts[2] == "Dsqrt") cfg.score = Score::sqrt;
  else throw InvalidArgument("unknown nonconformity score in case '" + text + "'");
}

/// All twelve cases in table order: delta, then modulation (sup, sqrt), then score (sup, sqrt).
inline std::vector<CaseConfig> all_cases(const CaseConfig& base) {
  std::vector<CaseConfig> out;
  for (int d : {25, 50, 75})
    for (Modulation s : {Modulation::sup, Modulation::sqrt})
      for (Score sc : {Score::sup, Score::sqrt}) {
        CaseConfig c = base;
        c.delta_percentile = d;
        c.modulation = s;
        c.score = sc;
        out.push_back(c);
      }
  return out;
}

struct ProximitySplit {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  double delta_k = 0.0;
};

/// Training set = sites strictly closer to the target than the p-th percentile of
/// their distances; ties at the threshold go to the test set.
inline ProximitySplit proximity_split(const Dataset& data, const Site& target, double percentile) {
  if (data.size() < 3) throw SplitDegenerate("proximity split needs at least 3 sites");
  std::vector<double> h(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) h[i] = spatial_dist(data.site(i), target);
  ProximitySplit out;
  out.delta_k = detail::percentile_linear(h, percentile);
  for (std::size_t i = 0; i < h.size(); ++i) (h[i] < out.delta_k ? out.train_idx : out.test_idx).push_back(i);
  if (out.train_idx.empty() || out.test_idx.empty())
    throw SplitDegenerate("proximity split at percentile " + std::to_string(percentile) +
                          " leaves an empty " + (out.train_idx.empty() ? "training" : "test") +
                          " set; choose another percentile");
  return out;
}

/// Variogram model produced for a training set, with a note when the fitter had
/// to fall back to a default model.
struct FittedModel {
  VariogramModel model;
  bool fallback = false;
  std::string note;
};

using ModelFitter = std::function<FittedModel(const Dataset&)>;

/// Empirical trace-variogram + WLS fit. Training sets that cannot support a fit
/// (fewer than two sites, no pair within max_lag, fewer than three lag classes,
/// or identical curves) get
/// a unit exponential model with range max_lag / 2; any model yields the same
/// prediction for them up to its weights.
inline ModelFitter default_model_fitter(FitOptions opts = {}) {
  return [opts](const Dataset& train) -> FittedModel {
    double max_lag = opts.max_lag > 0.0 ? opts.max_lag : default_max_lag(train);
    auto fallback = [&](const std::string& why) {
      FittedModel f;
      f.model.family = opts.family;
      f.model.nugget = 0.0;
      f.model.partial_sill = 1.0;
      f.model.range = max_lag > 0.0 ? max_lag / 2.0 : 1.0;
      f.fallback = true;
      f.note = why;
      return f;
    };
    if (train.size() < 2 || !(max_lag > 0.0)) return fallback("fewer than two training sites");
    EmpiricalVariogram emp;
    try {
      emp = empirical_trace_variogram(train, opts.n_bins, max_lag);
    } catch (const EmptyVariogram& e) {
      return fallback(e.what());
    }
    if (emp.bins.size() < 3) return fallback("fewer than three non-empty lag classes");
    try {
      return FittedModel{fit_model_detailed(emp, opts.family, opts.max_iter).model, false, {}};
    } catch (const DegenerateFit& e) {
      return fallback(e.what());
    }
  };
}

/// Everything the band construction needs that does not depend on the choice of
/// modulation or score: the split, the fitted model, the centre X* and the
/// surrogate predictions from each augmented training set.
struct Calibration {
  ProximitySplit split;
  FittedModel model;
  Curve center;
  KrigingSolution center_solution;
  std::vector<Curve> surrogates;
  std::vector<std::size_t> surrogate_source;  // dataset index of the test site behind each surrogate
  std::vector<std::string> failures;
};

/// X* from the training set, then one surrogate per test site j from the training
/// set augmented with j; the variogram is fitted once on the training set.
inline Calibration surrogate_predictions(const Dataset& data, const ProximitySplit& split, const ModelFitter& fitter,
                                         const Site& target, const SolverSettings& solver = {}) {
  Calibration cal;
  cal.split = split;
  const Dataset train = data.subset(split.train_idx);
  try {
    cal.model = fitter(train);
  } catch (const Error& e) {
    throw StageError("variogram", e.what());
  }

  try {
    auto center = krige_detailed(train, cal.model.model, target, solver);
    cal.center = std::move(center.prediction);
    cal.center_solution = std::move(center.solution);
  } catch (const Error& e) {
    throw StageError("kriging", e.what());
  }

  std::vector<Site> sites(train.sites().begin(), train.sites().end());
  std::vector<Curve> curves(train.curves().begin(), train.curves().end());
  sites.emplace_back();
  curves.emplace_back();
  for (std::size_t j : split.test_idx) {
    sites.back() = data.site(j);
    curves.back() = data.curve(j);
    try {
      cal.surrogates.push_back(krige_detailed(sites, curves, cal.model.model, target, solver).prediction);
      cal.surrogate_source.push_back(j);
    } catch (const Error& e) {
      cal.failures.push_back(data.site(j).id + ": " + e.what());
    }
  }
  if (cal.surrogates.empty() || 10 * cal.failures.size() > split.test_idx.size())
    throw StageError("kriging", std::to_string(cal.failures.size()) + " of " + std::to_string(split.test_idx.size()) +
                                    " surrogate predictions failed" +
                                    (cal.failures.empty() ? "" : "; first: " + cal.failures.front()));
  return cal;
}

/// S(t) = max_j |X*(t) - X_j(t)|, floored at eps.
inline Curve modulation_sup(const Curve& center, std::span<const Curve> surrogates, double eps) {
  if (surrogates.empty()) throw InvalidArgument("modulation needs at least one surrogate");
  std::vector<double> s(center.size(), 0.0);
  for (const Curve& x : surrogates) {
    require_same_grid(center, x);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::max(s[k], std::abs(center[k] - x[k]));
  }
  for (double& v : s) v = std::max(v, eps);
  return Curve(center.grid(), std::move(s));
}

/// S(t) = sqrt(mean_j (X*(t) - X_j(t))^2), floored at eps.
inline Curve modulation_sqrt(const Curve& center, std::span<const Curve> surrogates, double eps) {
  if (surrogates.empty()) throw InvalidArgument("modulation needs at least one surrogate");
  std::vector<double> s(center.size(), 0.0);
  for (const Curve& x : surrogates) {
    require_same_grid(center, x);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double d = center[k] - x[k];
      s[k] += d * d;
    }
  }
  const double inv = 1.0 / static_cast<double>(surrogates.size());
  for (double& v : s) v = std::max(std::sqrt(v * inv), eps);
  return Curve(center.grid(), std::move(s));
}

inline void require_positive(const Curve& S) {
  for (double v : S.values())
    if (!(v > 0.0)) throw InvalidArgument("modulation function must be strictly positive");
}

/// sup_t |X*(t) - X(t)| / S(t) on the grid.
inline double score_sup(const Curve& center, const Curve& surrogate, const Curve& S) {
  require_same_grid(center, surrogate);
  require_same_grid(center, S);
  require_positive(S);
  double r = 0.0;
  for (std::size_t k = 0; k < center.size(); ++k) r = std::max(r, std::abs(center[k] - surrogate[k]) / S[k]);
  return r;
}

/// sqrt( integral (X*(t) - X(t))^2 / S(t) dt ); with `squared_denominator` the
/// integrand divides by S(t)^2 instead.
inline double score_sqrt(const Curve& center, const Curve& surrogate, const Curve& S, bool squared_denominator = false) {
  require_same_grid(center, surrogate);
  require_same_grid(center, S);
  require_positive(S);
  std::vector<double> f(center.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = center[k] - surrogate[k];
    f[k] = d * d / (squared_denominator ? S[k] * S[k] : S[k]);
  }
  return std::sqrt(center.grid()->integrate(f));
}

/// k-th smallest score with k = ceil((l + 1)(1 - alpha)), clamped to [1, l].
inline double conformal_radius(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw InvalidArgument("conformal radius of an empty score list");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const std::size_t l = scores.size();
  const double pos = static_cast<double>(l + 1) * (1.0 - alpha);
  auto k = static_cast<std::size_t>(std::ceil(pos * (1.0 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, l);
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1), scores.end());
  return scores[k - 1];
}

struct PredictionBand {
  Curve center;
  Curve lower;
  Curve upper;
  std::optional<Curve> modulation;  // absent for the bootstrap baseline
  std::optional<double> rho;

  bool contains(const Curve& x) const {
    require_same_grid(center, x);
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k] < lower[k] || x[k] > upper[k]) return false;
    return true;
  }
};

/// [X* - rho S, X* + rho S]. Non-degenerate envelopes are rounded outward by a
/// few ulps so every curve with sup-score <= rho is contained in floating point.
inline PredictionBand make_band(const Curve& center, const Curve& S, double rho) {
  require_same_grid(center, S);
  if (!(rho >= 0.0)) throw InvalidArgument("band radius must be non-negative");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> lo(center.size()), hi(center.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double w = rho * S[k];
    if (w == 0.0) {
      lo[k] = hi[k] = center[k];
      continue;
    }
    const double wide = w * (1.0 + 4.0 * eps);
    hi[k] = std::nextafter(center[k] + wide, std::numeric_limits<double>::infinity());
    lo[k] = std::nextafter(center[k] - wide, -std::numeric_limits<double>::infinity());
  }
  return {center, Curve(center.grid(), std::move(lo)), Curve(center.grid(), std::move(hi)), S, rho};
}

inline double default_epsilon_floor(const Dataset& data) {
  const auto [lo, hi] = data.value_range();
  return hi > lo ? 1e-8 * (hi - lo) : 1e-8;
}

struct BandResult {
  PredictionBand band;
  std::vector<double> scores;
  double epsilon_floor = 0.0;
  bool heuristic = false;  // integral score with a pointwise band
};

/// Modulation, scores, radius and band from a calibration.
inline BandResult build_band(const Calibration& cal, Modulation modulation, Score score, double alpha, double eps,
                             bool squared_denominator = false) {
  try {
    BandResult out;
    out.epsilon_floor = eps;
    const Curve S = modulation == Modulation::sup ? modulation_sup(cal.center, cal.surrogates, eps)
                                                  : modulation_sqrt(cal.center, cal.surrogates, eps);
    out.scores.reserve(cal.surrogates.size());
    for (const Curve& x : cal.surrogates)
      out.scores.push_back(score == Score::sup ? score_sup(cal.center, x, S)
                                               : score_sqrt(cal.center, x, S, squared_denominator));
    out.band = make_band(cal.center, S, conformal_radius(out.scores, alpha));
    out.heuristic = score == Score::sqrt;
    return out;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("scoring", e.what());
  }
}

/// Calibration for one proximity percentile; shared by the four
/// (modulation, score) cases with that percentile.
inline Calibration calibrate(const Dataset& data, const Site& target, const CaseConfig& cfg) {
  cfg.validate();
  ProximitySplit split;
  try {
    split = proximity_split(data, target, cfg.delta_percentile);
  } catch (const Error& e) {
    throw StageError("split", e.what());
  }
  return surrogate_predictions(data, split, default_model_fitter(cfg.fit), target, cfg.solver);
}

struct ConformalResult {
  BandResult band;
  Calibration calibration;
};

/// Full procedure for one case at one target site.
inline ConformalResult conformal_predict(const Dataset& data, const Site& target, const CaseConfig& cfg) {
  Calibration cal = calibrate(data, target, cfg);
  const double eps = cfg.epsilon_floor.value_or(default_epsilon_floor(data));
  BandResult band = build_band(cal, cfg.modulation, cfg.score, cfg.alpha, eps, cfg.score_sqrt_squared_denominator);
  return {std::move(band), std::move(cal)};
}

}  // namespace fkcp
