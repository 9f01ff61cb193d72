#pragma once

// Basis systems on T and least-squares smoothing of sampled curves.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"

namespace fkcp {

enum class BasisFamily { bspline, fourier };

struct BasisSystem {
  BasisFamily family = BasisFamily::bspline;
  int n_basis = 30;
  int order = 4;          // bspline only; 4 = cubic
  double a = 0.0;
  double b = 1.0;
  double period = 0.0;    // fourier only; <= 0 means b - a

  static BasisSystem bspline(int n_basis, double a, double b, int order = 4) {
    BasisSystem s{BasisFamily::bspline, n_basis, order, a, b, 0.0};
    s.validate();
    return s;
  }

  static BasisSystem fourier(int n_basis, double a, double b, double period = 0.0) {
    BasisSystem s{BasisFamily::fourier, n_basis, 0, a, b, period};
    s.validate();
    return s;
  }

  void validate() const {
    if (n_basis < 1) throw InvalidArgument("basis needs at least one function");
    if (!(b > a)) throw InvalidArgument("basis domain must satisfy a < b");
    if (family == BasisFamily::bspline) {
      if (order < 1) throw InvalidArgument("bspline order must be positive");
      if (n_basis < order) throw InvalidArgument("bspline needs n_basis >= order");
    } else if (n_basis % 2 == 0) {
      throw InvalidArgument("fourier basis needs an odd number of functions");
    }
  }

  double effective_period() const { return period > 0.0 ? period : b - a; }

  /// Knot vector with `order` repeated end knots and equally spaced interior knots.
  std::vector<double> knots() const {
    const int interior = n_basis - order;
    std::vector<double> k;
    k.reserve(static_cast<std::size_t>(n_basis + order));
    for (int i = 0; i < order; ++i) k.push_back(a);
    for (int i = 1; i <= interior; ++i) k.push_back(a + (b - a) * i / (interior + 1));
    for (int i = 0; i < order; ++i) k.push_back(b);
    return k;
  }

  /// Values of every basis function at t.
  std::vector<double> evaluate(double t) const {
    return family == BasisFamily::bspline ? eval_bspline(t) : eval_fourier(t);
  }

  /// Design matrix: one row per grid point, one column per basis function.
  Eigen::MatrixXd design(const TimeGrid& grid) const {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(grid.size()), n_basis);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto row = evaluate(grid[i]);
      for (int j = 0; j < n_basis; ++j) phi(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    return phi;
  }

 private:
  std::vector<double> eval_bspline(double t) const {
    const auto k = knots();
    const int n = n_basis;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (t < a || t > b) return out;
    // span index s with k[s] <= t < k[s+1]; the right end belongs to the last span
    int s = order - 1;
    while (s < n - 1 && t >= k[static_cast<std::size_t>(s + 1)]) ++s;
    // Cox-de Boor on the active functions N_{s-order+1..s}
    std::vector<double> N(static_cast<std::size_t>(order), 0.0);
    N[0] = 1.0;
    std::vector<double> left(static_cast<std::size_t>(order)), right(static_cast<std::size_t>(order));
    for (int j = 1; j < order; ++j) {
      left[static_cast<std::size_t>(j)] = t - k[static_cast<std::size_t>(s + 1 - j)];
      right[static_cast<std::size_t>(j)] = k[static_cast<std::size_t>(s + j)] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
        const double temp = denom != 0.0 ? N[static_cast<std::size_t>(r)] / denom : 0.0;
        N[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
        saved = left[static_cast<std::size_t>(j - r)] * temp;
      }
      N[static_cast<std::size_t>(j)] = saved;
    }
    for (int r = 0; r < order; ++r) out[static_cast<std::size_t>(s - order + 1 + r)] = N[static_cast<std::size_t>(r)];
    return out;
  }

  std::vector<double> eval_fourier(double t) const {
    std::vector<double> out(static_cast<std::size_t>(n_basis));
    const double omega = 2.0 * std::numbers::pi / effective_period();
    out[0] = 1.0;
    for (int h = 1; 2 * h < n_basis + 1; ++h) {
      out[static_cast<std::size_t>(2 * h - 1)] = std::sin(h * omega * (t - a));
      out[static_cast<std::size_t>(2 * h)] = std::cos(h * omega * (t - a));
    }
    return out;
  }
};

/// Basis coefficients of the least-squares fit of `raw` onto `basis`.
inline Eigen::VectorXd basis_coefficients(const Curve& raw, const BasisSystem& basis) {
  basis.validate();
  if (raw.size() < static_cast<std::size_t>(basis.n_basis))
    throw UnderdeterminedFit("smoothing needs at least as many samples (" + std::to_string(raw.size()) +
                             ") as basis functions (" + std::to_string(basis.n_basis) + ")");
  const Eigen::MatrixXd phi = basis.design(*raw.grid());
  const Eigen::Map<const Eigen::VectorXd> y(raw.values().data(), static_cast<Eigen::Index>(raw.size()));
  return phi.colPivHouseholderQr().solve(y);
}

/// Least-squares projection of `raw` onto the span of `basis`, re-evaluated on
/// the original grid.
inline Curve smooth_to_basis(const Curve& raw, const BasisSystem& basis) {
  const Eigen::VectorXd coef = basis_coefficients(raw, basis);
  const Eigen::VectorXd fitted = basis.design(*raw.grid()) * coef;
  return Curve(raw.grid(), std::vector<double>(fitted.data(), fitted.data() + fitted.size()));
}

/// Smooths every curve of a dataset; the design matrix is factored once.
inline Dataset smooth_dataset(const Dataset& data, const BasisSystem& basis) {
  basis.validate();
  const GridPtr& grid = data.grid();
  if (grid->size() < static_cast<std::size_t>(basis.n_basis))
    throw UnderdeterminedFit("smoothing needs at least as many samples as basis functions");
  const Eigen::MatrixXd phi = basis.design(*grid);
  const auto qr = phi.colPivHouseholderQr();
  std::vector<Curve> out;
  out.reserve(data.size());
  for (const Curve& c : data.curves()) {
    const Eigen::Map<const Eigen::VectorXd> y(c.values().data(), static_cast<Eigen::Index>(c.size()));
    const Eigen::VectorXd fitted = phi * qr.solve(y);
    out.emplace_back(grid, std::vector<double>(fitted.data(), fitted.data() + fitted.size()));
  }
  return Dataset(grid, std::vector<Site>(data.sites().begin(), data.sites().end()), std::move(out));
}

/// Parses "bspline:K", "bspline:K:ORDER", "fourier:K" or "fourier:K:PERIOD" for a
/// grid on [a, b].
inline BasisSystem parse_basis(const std::string& spec, double a, double b) {
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) throw InvalidArgument("basis must look like bspline:K or fourier:K");
  const std::string family = spec.substr(0, c1);
  const auto c2 = spec.find(':', c1 + 1);
  int k = 0;
  double extra = 0.0;
  try {
    k = std::stoi(spec.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1));
    if (c2 != std::string::npos) extra = std::stod(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse basis '" + spec + "'");
  }
  if (family == "bspline") return BasisSystem::bspline(k, a, b, c2 == std::string::npos ? 4 : static_cast<int>(extra));
  if (family == "fourier") return BasisSystem::fourier(k, a, b, extra);
  throw InvalidArgument("unknown basis family '" + family + "'");
}

}  // namespace fkcp
