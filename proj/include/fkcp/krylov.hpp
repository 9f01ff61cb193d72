#pragma once

// Linear solvers for the symmetric, indefinite kriging saddle-point system.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace fkcp {

struct IterativeResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual_norm = 0.0;  // true ||b - A x||
  bool converged = false;
};

/// MINRES (Paige & Saunders) for symmetric A. Restarts from the current iterate
/// whenever the recurrence residual has converged but the true residual has not.
inline IterativeResult minres(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rel_tol, int max_iter) {
  const Eigen::Index n = b.size();
  IterativeResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const double target = rel_tol * bnorm;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  Eigen::VectorXd r = b;
  int used = 0;
  for (int cycle = 0; cycle < 4 && used < max_iter; ++cycle) {
    const double beta1 = r.norm();
    if (beta1 <= target) break;

    Eigen::VectorXd r1 = r, r2 = r, y = r;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n), w1 = w, w2 = w;
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n);
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;

    while (used < max_iter) {
      ++used;
      const double s = 1.0 / beta;
      const Eigen::VectorXd v = s * y;
      y.noalias() = A * v;
      if (oldb != 0.0) y -= (beta / oldb) * r1;
      const double alfa = v.dot(y);
      y -= (alfa / beta) * r2;
      r1 = r2;
      r2 = y;
      oldb = beta;
      beta = r2.norm();

      const double oldeps = epsln;
      const double delta = cs * dbar + sn * alfa;
      const double gbar = sn * dbar - cs * alfa;
      epsln = sn * beta;
      dbar = -cs * beta;
      const double gamma = std::max(std::hypot(gbar, beta), eps);
      cs = gbar / gamma;
      sn = beta / gamma;
      const double phi = cs * phibar;
      phibar = sn * phibar;

      w1 = w2;
      w2 = w;
      w = (v - oldeps * w1 - delta * w2) / gamma;
      dx += phi * w;

      if (phibar <= 0.5 * target || beta <= eps * beta1) break;
    }
    out.x += dx;
    r = b - A * out.x;
  }
  out.iterations = used;
  out.residual_norm = r.norm();
  out.converged = std::isfinite(out.residual_norm) && out.residual_norm <= target;
  return out;
}

/// Dense LU with partial pivoting plus two steps of iterative refinement.
inline Eigen::VectorXd direct_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = lu.solve(b);
  for (int k = 0; k < 2; ++k) x += lu.solve(b - A * x);
  return x;
}

}  // namespace fkcp
