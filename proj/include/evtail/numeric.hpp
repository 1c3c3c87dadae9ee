#pragma once

// Shared numerical kernels: normal distribution functions, the regularized
// incomplete beta function, tanh-sinh quadrature and empirical quantiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "evtail/prng.hpp"

namespace evtail {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double norm_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Inverse standard normal CDF: Acklam's rational approximation polished with
// one Halley step against erfc, good to ~1e-15 over (0,1).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("norm_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  double e = norm_cdf(x) - p;
  double u = e / norm_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

inline double CounterRng::next_normal() { return norm_quantile(next_uniform()); }

// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction.
inline double inc_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw Error("inc_beta: nonpositive shape");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  auto cf = [](double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
      int m2 = 2 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::fabs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::fabs(c) < tiny) c = tiny;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h;
  };
  double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta) / a;
  if (x < (a + 1.0) / (a + b + 2.0)) return front * cf(a, b, x);
  double front2 =
      std::exp(b * std::log1p(-x) + a * std::log(x) -
               (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b))) /
      b;
  return 1.0 - front2 * cf(b, a, 1.0 - x);
}

// Tanh-sinh (double exponential) quadrature on (0, 1). The integrand is
// called as f(x, cx) where cx is the exact complement 1 - x, so integrable
// singularities at either endpoint are resolved far below the spacing of
// doubles around 1 (the spectral densities need this).
template <typename F>
double integrate01(F&& f, double tol = 1e-10) {
  const double h0 = 1.0;
  auto eval_level = [&](double h, bool only_odd) {
    double sum = 0.0;
    for (int k = only_odd ? 1 : 0;; k += only_odd ? 2 : 1) {
      double t = h * k;
      double u = std::exp(-2.0 * std::sinh(t));  // maps to (0,1) from midpoint
      if (k > 0 && u < 1e-280) break;  // weight underflow
      double x1 = 1.0 / (1.0 + u);               // t >= 0 side
      double x2 = u / (1.0 + u);                 // mirrored side: 1 - x1 exactly
      double w = 2.0 * std::cosh(t) * u / ((1.0 + u) * (1.0 + u));
      double term = k == 0 ? w * f(x1, x2) : w * (f(x1, x2) + f(x2, x1));
      sum += term;
      if (k > 3 && std::fabs(term) < tol * 1e-3 * std::fabs(sum)) break;
      if (k > 4000) break;
    }
    return sum;
  };
  double h = h0;
  double integral = h * eval_level(h, false);
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    double refined = 0.5 * integral + h * eval_level(h, true);
    if (level > 1 && std::fabs(refined - integral) <
                         tol * std::max(1.0, std::fabs(refined))) {
      return refined;
    }
    integral = refined;
  }
  return integral;
}

// Empirical quantile as the inverse of the linearly interpolated empirical
// CDF with plotting positions i/(n+1). The margins module relies on this
// convention so the semiparametric CDF is exactly continuous at the
// threshold.
inline double empirical_quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error("empirical_quantile: empty sample");
  if (!(p > 0.0 && p < 1.0)) throw Error("empirical_quantile: p outside (0,1)");
  double pos = p * (n + 1);  // in units of rank
  if (pos <= 1.0) return sorted.front();
  if (pos >= static_cast<double>(n)) return sorted.back();
  std::size_t i = static_cast<std::size_t>(pos);  // 1-based lower rank
  double frac = pos - static_cast<double>(i);
  return sorted[i - 1] + frac * (sorted[i] - sorted[i - 1]);
}

inline std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double stdev_of(std::span<const double> xs) {
  double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace evtail
