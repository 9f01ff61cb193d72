#pragma once

// Synthetic spatial functional data: a deterministic mean curve plus a spatially
// correlated Gaussian field carried by a cubic B-spline basis.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fkcp/basis.hpp"
#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"

namespace fkcp {

/// mu(t) = t/2 + sin(2 pi t) - 2 sin(2 pi t - 1) log(2 pi t + 1/2).
inline double mean_function(double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 0.5 * t + std::sin(two_pi * t) - 2.0 * std::sin(two_pi * t - 1.0) * std::log(two_pi * t + 0.5);
}

/// C(h) = (1 - eta) exp(-c h) + eta.
inline double gp_covariance(double h, double eta, double c) {
  if (h < 0.0) throw InvalidArgument("covariance lag must be non-negative");
  return (1.0 - eta) * std::exp(-c * h) + eta;
}

/// Independent generator for a named sub-stream of a run seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace streams {
inline constexpr std::uint64_t simulation = 1;
inline constexpr std::uint64_t bootstrap = 2;
}  // namespace streams

/// Regular grid of n sites in [-1, 1] x [0, 1]: k x k nodes with k = ceil(sqrt(n)),
/// filled row by row (10 x 10 for n = 100).
inline std::vector<Site> regular_sites(std::size_t n) {
  if (n == 0) throw InvalidArgument("need at least one site");
  auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (k * k < n) ++k;
  std::vector<Site> out;
  out.reserve(n);
  for (std::size_t row = 0; row < k && out.size() < n; ++row)
    for (std::size_t col = 0; col < k && out.size() < n; ++col) {
      char id[32];
      std::snprintf(id, sizeof id, "s%03zu", out.size());
      const double u = k == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(col) / static_cast<double>(k - 1);
      const double v = k == 1 ? 0.5 : static_cast<double>(row) / static_cast<double>(k - 1);
      out.push_back({u, v, id});
    }
  return out;
}

/// Draws eps_s(t) = sum_k a_{s,k} B_k(t) / sqrt(sum_k B_k(t)^2) where, for each
/// basis index k, the vector a_{., k} ~ N(0, Sigma) with Sigma_ij = C(h_ij). The
/// normalisation gives Var eps_s(t) = 1 and Cov(eps_s(t), eps_r(t)) = C(h_sr).
class SpatialNoiseSampler {
 public:
  SpatialNoiseSampler(std::span<const Site> sites, GridPtr grid, double eta, double c, int n_basis = 30)
      : grid_(std::move(grid)), n_sites_(sites.size()) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in [0, 1]");
    if (!(c > 0.0)) throw InvalidArgument("decay rate c must be positive");
    const auto n = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd sigma(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        sigma(i, j) = gp_covariance(spatial_dist(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]), eta, c);

    // symmetric square root; eigenvalues below 1e-10 of the largest are treated as zero
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw GenerationError("eigen-decomposition of the site covariance failed");
    const double top = es.eigenvalues().maxCoeff();
    Eigen::VectorXd root(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ev = es.eigenvalues()(i);
      if (ev < -1e-8 * top) throw GenerationError("site covariance is not positive semi-definite");
      root(i) = ev > 1e-10 * top ? std::sqrt(ev) : 0.0;
    }
    sqrt_sigma_ = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();

    const BasisSystem basis = BasisSystem::bspline(n_basis, grid_->front(), grid_->back());
    design_ = basis.design(*grid_);
    for (Eigen::Index r = 0; r < design_.rows(); ++r) design_.row(r) /= design_.row(r).norm();
  }

  /// n_sites x grid matrix of one joint draw.
  Eigen::MatrixXd sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n_sites_), design_.cols());
    for (Eigen::Index k = 0; k < z.cols(); ++k)
      for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, k) = normal(rng);
    return sqrt_sigma_ * z * design_.transpose();
  }

 private:
  GridPtr grid_;
  std::size_t n_sites_;
  Eigen::MatrixXd sqrt_sigma_;
  Eigen::MatrixXd design_;
};

struct ScenarioConfig {
  int scenario = 1;       // 1: mu + eps, 2: mu^3 + eps
  double eta = 0.1;
  double c = 0.1;
  std::size_t n_sites = 100;
  std::size_t n_time = 101;  // uniform grid on [0, 1]
  int n_basis = 30;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (scenario != 1 && scenario != 2) throw InvalidArgument("scenario must be 1 or 2");
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in [0, 1]");
    if (!(c > 0.0)) throw InvalidArgument("c must be positive");
    if (n_sites < 1) throw InvalidArgument("n_sites must be positive");
    if (noise_sd < 0.0) throw InvalidArgument("noise_sd must be non-negative");
  }
};

inline Dataset sample_dataset(const ScenarioConfig& cfg) {
  cfg.validate();
  const GridPtr grid = TimeGrid::uniform(0.0, 1.0, cfg.n_time);
  std::vector<Site> sites = regular_sites(cfg.n_sites);

  std::vector<double> mean(grid->size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double m = mean_function((*grid)[k]);
    mean[k] = cfg.scenario == 1 ? m : m * m * m;
  }

  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(grid->size()));
  if (cfg.noise_sd > 0.0) {
    auto rng = make_rng(cfg.seed, streams::simulation);
    noise = cfg.noise_sd * SpatialNoiseSampler(sites, grid, cfg.eta, cfg.c, cfg.n_basis).sample(rng);
  }

  std::vector<Curve> curves;
  curves.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::vector<double> v(mean);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += noise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    curves.emplace_back(grid, std::move(v));
  }
  return Dataset(grid, std::move(sites), std::move(curves));
}

}  // namespace fkcp
