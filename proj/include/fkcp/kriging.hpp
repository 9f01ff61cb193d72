#pragma once

// Functional ordinary kriging: saddle-point system assembly, weights and the
// BLUP curve at a target site.

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"
#include "fkcp/krylov.hpp"
#include "fkcp/variogram.hpp"

namespace fkcp {

/// [ G  1 ] [lambda]   [g0]
/// [ 1' 0 ] [  m   ] = [ 1]   with G_ij = gamma(h_ij), G_ii = 0, g0_i = gamma(h_0i).
struct KrigingSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  std::size_t n_sites() const { return static_cast<std::size_t>(b.size()) - 1; }
};

struct SolverSettings {
  double tol = 1e-10;    // relative to ||b||
  int max_iter = 0;      // 0: 10 * (n + 1)
  int jitter_steps = 3;  // diagonal jitter retries before the direct fallback
};

enum class SolveMethod { minres, minres_jitter, direct };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::minres: return "minres";
    case SolveMethod::minres_jitter: return "minres_jitter";
    case SolveMethod::direct: return "direct";
  }
  return "?";
}

struct KrigingSolution {
  std::vector<double> lambda;
  double multiplier = 0.0;
  double residual_norm = 0.0;  // ||A x - b|| on the unjittered system
  int iterations = 0;
  SolveMethod method = SolveMethod::minres;
  double jitter = 0.0;
};

inline KrigingSystem assemble_system(std::span<const Site> sites, const VariogramModel& model, const Site& target) {
  const std::size_t n = sites.size();
  if (n == 0) throw InvalidArgument("kriging needs at least one training site");
  model.validate();
  std::set<std::pair<double, double>> seen;
  for (const Site& s : sites)
    if (!seen.insert({s.u, s.v}).second)
      throw SingularSystem("coincident training sites make the kriging system singular ('" + s.id + "')");

  const auto N = static_cast<Eigen::Index>(n);
  KrigingSystem sys{Eigen::MatrixXd::Zero(N + 1, N + 1), Eigen::VectorXd::Zero(N + 1)};
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const double g = eval_model(model, spatial_dist(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]));
      sys.A(i, j) = g;
      sys.A(j, i) = g;
    }
    sys.A(i, N) = 1.0;
    sys.A(N, i) = 1.0;
    sys.b(i) = eval_model(model, spatial_dist(sites[static_cast<std::size_t>(i)], target));
  }
  sys.b(N) = 1.0;
  return sys;
}

inline KrigingSystem assemble_system(const Dataset& train, const VariogramModel& model, const Site& target) {
  return assemble_system(train.sites(), model, target);
}

namespace detail {

inline KrigingSolution unpack(const KrigingSystem& sys, const Eigen::VectorXd& x) {
  KrigingSolution s;
  const auto n = static_cast<Eigen::Index>(sys.n_sites());
  s.lambda.assign(x.data(), x.data() + n);
  s.multiplier = x(n);
  s.residual_norm = (sys.A * x - sys.b).norm();
  return s;
}

}  // namespace detail

/// MINRES on the saddle-point system; on non-convergence retries with a growing
/// diagonal jitter on the variogram block, then falls back to dense LU.
inline KrigingSolution solve_weights(const KrigingSystem& sys, const SolverSettings& cfg = {}) {
  const auto dim = sys.b.size();
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10 * static_cast<int>(dim);
  const double target = cfg.tol * sys.b.norm();

  auto accept = [&](const Eigen::VectorXd& x) {
    if (!x.allFinite()) return false;
    return (sys.A * x - sys.b).norm() <= target;
  };

  IterativeResult it = minres(sys.A, sys.b, cfg.tol, max_iter);
  int total_iter = it.iterations;
  if (it.converged && accept(it.x)) {
    KrigingSolution s = detail::unpack(sys, it.x);
    s.iterations = total_iter;
    s.method = SolveMethod::minres;
    return s;
  }

  double jitter = 1e-10 * sys.A.cwiseAbs().maxCoeff();
  for (int k = 0; k < cfg.jitter_steps; ++k, jitter *= 10.0) {
    Eigen::MatrixXd Aj = sys.A;
    for (Eigen::Index i = 0; i + 1 < dim; ++i) Aj(i, i) += jitter;
    it = minres(Aj, sys.b, cfg.tol, max_iter);
    total_iter += it.iterations;
    if (accept(it.x)) {
      KrigingSolution s = detail::unpack(sys, it.x);
      s.iterations = total_iter;
      s.method = SolveMethod::minres_jitter;
      s.jitter = jitter;
      return s;
    }
  }

  const Eigen::VectorXd x = direct_solve(sys.A, sys.b);
  KrigingSolution s = detail::unpack(sys, x);
  s.iterations = total_iter;
  s.method = SolveMethod::direct;
  if (!accept(x)) throw SolverFailure("kriging system did not converge after direct fallback", s.residual_norm);
  return s;
}

/// X*(t) = sum_i lambda_i X_i(t).
inline Curve predict_curve(std::span<const Curve> curves, std::span<const double> lambda) {
  if (curves.size() != lambda.size() || curves.empty())
    throw InvalidArgument("weight count differs from training curve count");
  const GridPtr& grid = curves[0].grid();
  std::vector<double> v(grid->size(), 0.0);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (!same_grid(curves[i].grid(), grid)) throw GridMismatch();
    const auto c = curves[i].values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += lambda[i] * c[k];
  }
  return Curve(grid, std::move(v));
}

inline Curve predict_curve(const Dataset& train, const KrigingSolution& sol) {
  return predict_curve(train.curves(), sol.lambda);
}

/// Index of a training site at exactly the target's coordinates, or npos.
inline std::size_t coincident_site(std::span<const Site> sites, const Site& target) {
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (sites[i].u == target.u && sites[i].v == target.v) return i;
  return static_cast<std::size_t>(-1);
}

struct KrigingResult {
  Curve prediction;
  KrigingSolution solution;
  bool shortcut = false;  // target coincided with a zero-nugget training site
};

inline KrigingResult krige_detailed(std::span<const Site> sites, std::span<const Curve> curves,
                                    const VariogramModel& model, const Site& target, const SolverSettings& cfg = {}) {
  if (sites.empty() || sites.size() != curves.size()) throw InvalidArgument("kriging needs matching non-empty sites and curves");
  const std::size_t hit = coincident_site(sites, target);
  if (hit != static_cast<std::size_t>(-1) && model.nugget == 0.0) {
    KrigingSolution s;
    s.lambda.assign(sites.size(), 0.0);
    s.lambda[hit] = 1.0;
    return {curves[hit], std::move(s), true};
  }
  KrigingSolution s = solve_weights(assemble_system(sites, model, target), cfg);
  Curve pred = predict_curve(curves, s.lambda);
  return {std::move(pred), std::move(s), false};
}

inline KrigingResult krige_detailed(const Dataset& train, const VariogramModel& model, const Site& target,
                                    const SolverSettings& cfg = {}) {
  return krige_detailed(train.sites(), train.curves(), model, target, cfg);
}

inline Curve krige(const Dataset& train, const VariogramModel& model, const Site& target, const SolverSettings& cfg = {}) {
  return krige_detailed(train, model, target, cfg).prediction;
}

}  // namespace fkcp
