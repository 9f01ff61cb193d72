#pragma once

// Pointwise bootstrap band around the kriging prediction: resample sites with
// replacement, refit the variogram and re-krige for every resample, then take
// pointwise empirical quantiles of the resampled predictions.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fkcp/conformal.hpp"
#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"
#include "fkcp/kriging.hpp"
#include "fkcp/parallel.hpp"
#include "fkcp/simulate.hpp"

namespace fkcp {

struct BootstrapConfig {
  std::size_t B = 1000;
  double alpha = 0.25;
  std::uint64_t seed = 0;
  double coord_jitter = 1e-9;  // shift applied to the k-th repeat of a site: k * coord_jitter in u and v
  unsigned threads = 1;

  void validate() const {
    if (B < 2) throw InvalidArgument("bootstrap needs B >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  }
};

struct BootstrapResult {
  PredictionBand band;  // no modulation or radius
  std::size_t resamples = 0;
  std::size_t failures = 0;
};

/// Index draws for resample b; each resample has its own generator derived from
/// the seed so results do not depend on thread scheduling.
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t b) {
  auto rng = make_rng(seed, (streams::bootstrap << 32) + b);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

/// Dataset for one resample; repeated sites get micro-shifted coordinates and
/// suffixed ids so the kriging system stays non-singular.
inline Dataset resample_dataset(const Dataset& data, std::span<const std::size_t> idx, double jitter) {
  std::vector<std::size_t> seen(data.size(), 0);
  std::vector<Site> sites;
  std::vector<Curve> curves;
  sites.reserve(idx.size());
  curves.reserve(idx.size());
  for (std::size_t i : idx) {
    Site s = data.site(i);
    const std::size_t k = seen[i]++;
    if (k > 0) {
      s.u += static_cast<double>(k) * jitter;
      s.v += static_cast<double>(k) * jitter;
      s.id += "#" + std::to_string(k);
    }
    sites.push_back(std::move(s));
    curves.push_back(data.curve(i));
  }
  return Dataset(data.grid(), std::move(sites), std::move(curves));
}

/// Band from explicit resamples (one index list per resample).
inline BootstrapResult bootstrap_band_from_resamples(const Dataset& data, const Site& target, const ModelFitter& fitter,
                                                     const std::vector<std::vector<std::size_t>>& resamples,
                                                     const BootstrapConfig& cfg, const SolverSettings& solver = {}) {
  if (data.size() < 3) throw InvalidArgument("bootstrap needs at least 3 sites");
  BootstrapResult out;
  const Curve center = krige(data, fitter(data).model, target, solver);

  std::vector<std::optional<Curve>> preds(resamples.size());
  parallel_for(resamples.size(), cfg.threads, [&](std::size_t b) {
    try {
      const Dataset rs = resample_dataset(data, resamples[b], cfg.coord_jitter);
      preds[b] = krige(rs, fitter(rs).model, target, solver);
    } catch (const Error&) {
      preds[b].reset();
    }
  });

  std::vector<const Curve*> ok;
  for (const auto& p : preds)
    if (p) ok.push_back(&*p);
  out.resamples = resamples.size();
  out.failures = resamples.size() - ok.size();
  if (ok.size() < 2 || 5 * out.failures > resamples.size())
    throw BaselineFailure(std::to_string(out.failures) + " of " + std::to_string(resamples.size()) +
                          " bootstrap resamples failed");

  std::vector<double> lo(center.size()), hi(center.size()), column(ok.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    for (std::size_t b = 0; b < ok.size(); ++b) column[b] = (*ok[b])[k];
    lo[k] = detail::percentile_linear(column, 100.0 * cfg.alpha / 2.0);
    hi[k] = detail::percentile_linear(column, 100.0 * (1.0 - cfg.alpha / 2.0));
  }
  out.band = PredictionBand{center, Curve(center.grid(), std::move(lo)), Curve(center.grid(), std::move(hi)),
                            std::nullopt, std::nullopt};
  return out;
}

inline BootstrapResult bootstrap_band(const Dataset& data, const Site& target, const ModelFitter& fitter,
                                      const BootstrapConfig& cfg, const SolverSettings& solver = {}) {
  cfg.validate();
  std::vector<std::vector<std::size_t>> resamples(cfg.B);
  for (std::size_t b = 0; b < cfg.B; ++b) resamples[b] = bootstrap_indices(data.size(), cfg.seed, b);
  return bootstrap_band_from_resamples(data, target, fitter, resamples, cfg, solver);
}

}  // namespace fkcp
