#pragma once

// Derivative-free optimization used by every fit in the library: a standard
// Nelder-Mead simplex over an unconstrained working scale, parameter
// transforms that map bounded domains onto that scale, golden-section search
// for one-dimensional profiles, and finite-difference Hessians for standard
// errors.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "evtail/numeric.hpp"
#include "evtail/prng.hpp"

namespace evtail {

struct MinimizeResult {
  std::vector<double> x;
  double fmin = std::numeric_limits<double>::infinity();
  bool converged = false;
  int n_eval = 0;
};

// Nelder-Mead with the usual reflection/expansion/contraction/shrink moves.
inline MinimizeResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, double step = 0.1, double ftol = 1e-10,
    int max_eval = 4000) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) {
    fv[i] = f(simplex[i]);
    ++res.n_eval;
  }
  auto order = [&]() {
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = i + 1; j <= n; ++j)
        if (fv[j] < fv[i]) {
          std::swap(fv[i], fv[j]);
          std::swap(simplex[i], simplex[j]);
        }
  };
  order();
  while (res.n_eval < max_eval) {
    if (std::fabs(fv[n] - fv[0]) <=
        ftol * (std::fabs(fv[0]) + std::fabs(fv[n])) + 1e-300) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
    auto point = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
      return p;
    };
    std::vector<double> xr = point(-1.0);
    double fr = f(xr);
    ++res.n_eval;
    if (fr < fv[0]) {
      std::vector<double> xe = point(-2.0);
      double fe = f(xe);
      ++res.n_eval;
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      bool outside = fr < fv[n];
      std::vector<double> xc = point(outside ? -0.5 : 0.5);
      double fc = f(xc);
      ++res.n_eval;
      if (fc < std::min(fr, fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          fv[i] = f(simplex[i]);
          ++res.n_eval;
        }
      }
    }
    order();
  }
  res.x = simplex[0];
  res.fmin = fv[0];
  return res;
}

// Restarted minimization: deterministic jitter around the best point so far.
inline MinimizeResult minimize_restarts(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, int restarts = 5, double step = 0.1,
    std::uint64_t seed = 0x5eed) {
  MinimizeResult best = nelder_mead(f, x0, step);
  CounterRng rng(seed, 17);
  for (int r = 1; r < restarts; ++r) {
    std::vector<double> start = best.x;
    for (double& v : start) v += step * (2.0 * rng.next_uniform() - 1.0);
    MinimizeResult cand = nelder_mead(f, start, step * 0.5);
    cand.n_eval += best.n_eval;
    if (cand.fmin < best.fmin) best = cand;
  }
  return best;
}

template <typename F>
double golden_section(F&& f, double lo, double hi, double tol = 1e-8) {
  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol * (1.0 + std::fabs(a) + std::fabs(b))) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

// Central finite-difference Hessian.
inline std::vector<std::vector<double>> numerical_hessian(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h = 1e-5) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
  double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hess[i][i] = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      std::vector<double> xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h;
      xpp[j] += h;
      xpm[i] += h;
      xpm[j] -= h;
      xmp[i] -= h;
      xmp[j] += h;
      xmm[i] -= h;
      xmm[j] -= h;
      hess[i][j] = hess[j][i] =
          (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
    }
  }
  return hess;
}

// Inverse of a small symmetric matrix by Gauss-Jordan; returns empty on
// (numerical) singularity.
inline std::vector<std::vector<double>> invert_matrix(
    std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-300) return {};
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double m = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= m * a[col][j];
        inv[r][j] -= m * inv[col][j];
      }
    }
  }
  return inv;
}

// Bounded <-> unconstrained reparameterizations.
namespace transform {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// (lo, hi) box.
inline double to_working_box(double x, double lo, double hi) {
  return logit((x - lo) / (hi - lo));
}
inline double from_working_box(double t, double lo, double hi) {
  return lo + (hi - lo) * sigmoid(t);
}

// (0, inf).
inline double to_working_log(double x) { return std::log(x); }
inline double from_working_log(double t) { return std::exp(t); }

}  // namespace transform

}  // namespace evtail
