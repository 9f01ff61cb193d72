// Simulates one scenario-1 field, holds out the site nearest the centre of the
// region and prints the conformal band for it next to the truth.

#include <cstdio>

#include "fkcp/fkcp.hpp"

int main() {
  fkcp::ScenarioConfig sc;
  sc.seed = 7;
  const fkcp::Dataset raw = fkcp::sample_dataset(sc);
  const fkcp::Dataset data = fkcp::smooth_dataset(raw, fkcp::BasisSystem::bspline(30, 0.0, 1.0));

  std::size_t held = 0;
  double best = 1e300;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = fkcp::spatial_dist(data.site(i), {0.0, 0.5, ""});
    if (d < best) best = d, held = i;
  }

  fkcp::CaseConfig cfg;  // Δ50, S_sqrt, D_sup, alpha 0.25
  const auto res = fkcp::conformal_predict(data.without(held), data.site(held), cfg);
  const auto& band = res.band.band;
  const auto& truth = data.curve(held);

  std::printf("site %s  rho %.4f  width %.4f  inside %s\n", data.site(held).id.c_str(), *band.rho,
              fkcp::band_width(band), band.contains(truth) ? "yes" : "no");
  const auto t = data.grid()->points();
  for (std::size_t k = 0; k < t.size(); k += 10)
    std::printf("t=%.2f  %9.4f  [%9.4f, %9.4f]  truth %9.4f\n", t[k], band.center[k], band.lower[k], band.upper[k],
                truth[k]);
}
