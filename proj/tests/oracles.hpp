#pragma once

// Reference computations written independently of the library: plain loops on
// std::vector, no Eigen, no shared helpers.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double trapezoid(const Vec& t, const Vec& f) {
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) s += (t[k] - t[k - 1]) * (f[k] + f[k - 1]) / 2.0;
  return s;
}

// Gaussian elimination with partial pivoting.
inline Vec solve(Mat A, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
    if (A[p][c] == 0.0) throw std::runtime_error("singular");
    std::swap(A[p], A[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

// Least squares through the normal equations.
inline Vec least_squares(const Mat& X, const Vec& y) {
  const std::size_t p = X[0].size();
  Mat G(p, Vec(p, 0.0));
  Vec r(p, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t a = 0; a < p; ++a) {
      r[a] += X[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) G[a][b] += X[i][a] * X[i][b];
    }
  return solve(G, r);
}

inline double exp_variogram(double nugget, double sill, double range, double h) {
  return nugget + sill * (1.0 - std::exp(-h / range));
}

struct Pt {
  double u, v;
};

inline double dist(Pt a, Pt b) { return std::sqrt((a.u - b.u) * (a.u - b.u) + (a.v - b.v) * (a.v - b.v)); }

// Ordinary kriging matrix with zero diagonal and the unbiasedness row.
inline Mat kriging_matrix(const std::vector<Pt>& s, double nugget, double sill, double range) {
  const std::size_t n = s.size();
  Mat A(n + 1, Vec(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      A[i][j] = i == j ? 0.0 : exp_variogram(nugget, sill, range, dist(s[i], s[j]));
    A[i][n] = 1.0;
    A[n][i] = 1.0;
  }
  return A;
}

inline Vec kriging_rhs(const std::vector<Pt>& s, Pt target, double nugget, double sill, double range) {
  Vec b;
  for (const Pt& p : s) b.push_back(exp_variogram(nugget, sill, range, dist(p, target)));
  b.push_back(1.0);
  return b;
}

inline Vec kriging_weights(const std::vector<Pt>& s, Pt target, double nugget, double sill, double range) {
  Vec x = solve(kriging_matrix(s, nugget, sill, range), kriging_rhs(s, target, nugget, sill, range));
  x.pop_back();
  return x;
}

inline Vec weighted_sum(const std::vector<Vec>& curves, const Vec& w) {
  Vec out(curves[0].size(), 0.0);
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w[i] * curves[i][k];
  return out;
}

// Linear-interpolation percentile over the sorted sample.
inline double percentile(Vec x, double p) {
  std::sort(x.begin(), x.end());
  const double pos = p / 100.0 * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

// k-th smallest with k = ceil((l+1)(1-alpha)) clamped to [1, l], by counting.
inline double conformal_quantile(Vec scores, double alpha) {
  const double l = static_cast<double>(scores.size());
  long k = static_cast<long>(std::ceil((l + 1.0) * (1.0 - alpha) - 1e-9));
  k = std::clamp(k, 1L, static_cast<long>(scores.size()));
  std::sort(scores.begin(), scores.end());
  return scores[static_cast<std::size_t>(k - 1)];
}

struct Bin {
  double gamma;
  std::size_t count;
};

// Pair binning by explicit bin boundaries: bin b holds pairs with b*w <= h < (b+1)*w,
// and h == max_lag goes to the last bin.
inline std::vector<Bin> bin_pairs(const std::vector<Pt>& s, const std::vector<Vec>& curves, const Vec& t,
                                  std::size_t n_bins, double max_lag) {
  std::vector<Bin> bins(n_bins, {0.0, 0});
  const double w = max_lag / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j <= i) continue;
      const double h = dist(s[i], s[j]);
      if (h > max_lag) continue;
      std::size_t b = n_bins - 1;
      for (std::size_t c = 0; c < n_bins; ++c)
        if (h >= static_cast<double>(c) * w && h < static_cast<double>(c + 1) * w) {
          b = c;
          break;
        }
      Vec d2(t.size());
      for (std::size_t k = 0; k < t.size(); ++k) d2[k] = (curves[i][k] - curves[j][k]) * (curves[i][k] - curves[j][k]);
      bins[b].gamma += trapezoid(t, d2);
      bins[b].count += 1;
    }
  for (auto& b : bins)
    if (b.count) b.gamma /= 2.0 * static_cast<double>(b.count);
  return bins;
}

inline double wls(const Vec& lags, const Vec& gammas, const std::vector<std::size_t>& counts, double nugget,
                  double sill, double range) {
  double s = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double g = exp_variogram(nugget, sill, range, lags[i]);
    s += static_cast<double>(counts[i]) * (gammas[i] - g) * (gammas[i] - g) / (g * g);
  }
  return s;
}

// Best WLS value on an n^3 grid over the fitter's parameter box.
inline double grid_search_wls(const Vec& lags, const Vec& gammas, const std::vector<std::size_t>& counts,
                              double max_lag, int n = 50) {
  double mean = 0.0, mx = 0.0;
  for (double g : gammas) {
    mean += g;
    mx = std::max(mx, g);
  }
  mean /= static_cast<double>(gammas.size());
  double best = INFINITY;
  for (int a = 0; a < n; ++a)
    for (int b = 1; b <= n; ++b)
      for (int c = 1; c <= n; ++c) {
        const double nugget = 2.0 * mx * a / n;
        const double sill = 2.0 * mx * b / n;
        const double range = 2.0 * max_lag * c / n;
        best = std::min(best, wls(lags, gammas, counts, nugget, sill, range));
      }
  return best;
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace oracle
