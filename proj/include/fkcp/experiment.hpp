#pragma once

// Leave-one-site-out evaluation: every site in turn is removed, predicted from
// the others and its observed curve scored against the band.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fkcp/bootstrap.hpp"
#include "fkcp/conformal.hpp"
#include "fkcp/metrics.hpp"
#include "fkcp/parallel.hpp"

namespace fkcp {

struct SiteOutcome {
  std::size_t index = 0;
  double cov_l = 0.0;  // percent of grid points inside
  bool inside = false;
  double width = 0.0;
  double s_alpha = 0.0;
  double seconds = 0.0;
};

struct CaseSummary {
  std::string label;  // case label or "bootstrap"
  int delta = 0;
  Modulation modulation = Modulation::sqrt;
  Score score = Score::sup;
  bool bootstrap = false;
  double alpha = 0.0;
  double cov_l = 0.0;  // percent
  double cov_g = 0.0;  // percent
  double width = 0.0;
  double s_alpha = 0.0;
  double tt = 0.0;
  double mt = 0.0;
  std::optional<Curve> local_cov;
  std::vector<SiteOutcome> sites;
  std::vector<PredictionBand> bands;
};

/// Aggregates per-target bands against the observed curves.
inline CaseSummary summarize(CaseSummary head, const Dataset& data, std::vector<PredictionBand> bands,
                             std::span<const double> seconds, double alpha) {
  std::vector<BandTruth> pairs;
  TimingAccumulator timing;
  double width = 0.0, s_alpha = 0.0;
  head.sites.clear();
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const Curve& truth = data.curve(i);
    pairs.push_back({&bands[i], &truth});
    SiteOutcome o;
    o.index = i;
    const BandTruth one[1] = {{&bands[i], &truth}};
    o.cov_l = mean_local_coverage(local_coverage(one));
    o.inside = bands[i].contains(truth);
    o.width = band_width(bands[i]);
    o.s_alpha = band_score(bands[i], truth, alpha);
    o.seconds = seconds[i];
    width += o.width;
    s_alpha += o.s_alpha;
    timing.add(o.seconds);
    head.sites.push_back(o);
  }
  const double n = static_cast<double>(bands.size());
  head.alpha = alpha;
  head.local_cov = local_coverage(pairs);
  head.cov_l = mean_local_coverage(*head.local_cov);
  head.cov_g = global_coverage(pairs);
  head.width = width / n;
  head.s_alpha = s_alpha / n;
  head.tt = timing.total();
  head.mt = timing.mono();
  head.bands = std::move(bands);
  return head;
}

inline CaseSummary case_head(const CaseConfig& c) {
  CaseSummary h;
  h.label = case_label(c);
  h.delta = c.delta_percentile;
  h.modulation = c.modulation;
  h.score = c.score;
  return h;
}

/// One case, full procedure per target.
inline CaseSummary loocv_case(const Dataset& data, const CaseConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  std::vector<PredictionBand> bands(data.size());
  std::vector<double> secs(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const Stopwatch sw;
    try {
      bands[i] = conformal_predict(data.without(i), data.site(i), cfg).band.band;
    } catch (const Error& e) {
      throw Error("target '" + data.site(i).id + "': " + e.what());
    }
    secs[i] = sw.seconds();
  });
  return summarize(case_head(cfg), data, std::move(bands), secs, cfg.alpha);
}

/// All twelve cases in table order. For each target and proximity percentile the
/// calibration is computed once and shared by the four (S, D) cases; each case
/// is charged the calibration time plus its own scoring time.
inline std::vector<CaseSummary> loocv_sweep(const Dataset& data, const CaseConfig& base, unsigned threads = 1) {
  base.validate();
  const std::vector<CaseConfig> cases = all_cases(base);
  const std::size_t n = data.size();
  std::vector<std::vector<PredictionBand>> bands(cases.size(), std::vector<PredictionBand>(n));
  std::vector<std::vector<double>> secs(cases.size(), std::vector<double>(n));

  parallel_for(n, threads, [&](std::size_t i) {
    const Dataset rest = data.without(i);
    const double eps = base.epsilon_floor.value_or(default_epsilon_floor(rest));
    for (std::size_t d = 0; d < 3; ++d) {
      const Stopwatch cal_watch;
      Calibration cal;
      try {
        cal = calibrate(rest, data.site(i), cases[4 * d]);
      } catch (const Error& e) {
        throw Error("target '" + data.site(i).id + "': " + e.what());
      }
      const double cal_seconds = cal_watch.seconds();
      for (std::size_t k = 4 * d; k < 4 * d + 4; ++k) {
        const Stopwatch sw;
        bands[k][i] = build_band(cal, cases[k].modulation, cases[k].score, cases[k].alpha, eps,
                                 cases[k].score_sqrt_squared_denominator)
                          .band;
        secs[k][i] = cal_seconds + sw.seconds();
      }
    }
  });

  std::vector<CaseSummary> out;
  for (std::size_t k = 0; k < cases.size(); ++k)
    out.push_back(summarize(case_head(cases[k]), data, std::move(bands[k]), secs[k], cases[k].alpha));
  return out;
}

/// Bootstrap baseline under the same leave-one-site-out protocol.
inline CaseSummary loocv_bootstrap(const Dataset& data, const BootstrapConfig& cfg, const FitOptions& fit = {},
                                   const SolverSettings& solver = {}) {
  cfg.validate();
  const ModelFitter fitter = default_model_fitter(fit);
  std::vector<PredictionBand> bands(data.size());
  std::vector<double> secs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Stopwatch sw;
    BootstrapConfig per_site = cfg;
    per_site.seed = cfg.seed + 7919 * static_cast<std::uint64_t>(i);
    try {
      bands[i] = bootstrap_band(data.without(i), data.site(i), fitter, per_site, solver).band;
    } catch (const Error& e) {
      throw Error("target '" + data.site(i).id + "': " + e.what());
    }
    secs[i] = sw.seconds();
  }
  CaseSummary head;
  head.label = "bootstrap";
  head.bootstrap = true;
  return summarize(head, data, std::move(bands), secs, cfg.alpha);
}

}  // namespace fkcp
