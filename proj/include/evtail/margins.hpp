#pragma once

// Semiparametric marginal CDF — interpolated empirical bulk below the GPD
// threshold, GPD tail above — with exact maps to and from the Laplace and
// unit-Frechet scales.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "evtail/gpd.hpp"
#include "evtail/numeric.hpp"

namespace evtail {

enum class MarginScale { laplace, frechet };

struct MarginTransform {
  std::vector<double> sorted;  // ascending copy of the sample
  GpdFit gpd;
};

inline MarginTransform make_margin(std::span<const double> sample,
                                   double quantile_level,
                                   const GpdConfig& cfg = {}) {
  MarginTransform t;
  t.sorted = sorted_copy(sample);
  t.gpd = fit_gpd(sample, quantile_level, cfg);
  return t;
}

// Interpolated empirical CDF with plotting positions i/(n+1); tied values
// get their averaged rank. Inverse of empirical_quantile for distinct data.
inline double empirical_cdf_interp(std::span<const double> sorted, double x) {
  const double n = static_cast<double>(sorted.size());
  if (x <= sorted.front()) return 1.0 / (n + 1.0);
  if (x >= sorted.back()) return n / (n + 1.0);
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), x);
  if (lo != hi) {
    // x equals a (possibly repeated) order statistic: averaged rank
    double r1 = static_cast<double>(lo - sorted.begin()) + 1.0;
    double r2 = static_cast<double>(hi - sorted.begin());
    return 0.5 * (r1 + r2) / (n + 1.0);
  }
  double rank = static_cast<double>(lo - sorted.begin());  // x between
  double xl = sorted[static_cast<std::size_t>(rank) - 1];
  double xr = sorted[static_cast<std::size_t>(rank)];
  double frac = (x - xl) / (xr - xl);
  return (rank + frac) / (n + 1.0);
}

// Below u: empirical bulk; at and above u: (1 - theta_u) + theta_u * G(x)
// with theta_u = 1 - quantile_level. Continuous at u because the threshold
// is the interpolated empirical quantile.
inline double semiparametric_cdf(const MarginTransform& t, double x) {
  if (x >= t.gpd.threshold) {
    double q = t.gpd.quantile_level;
    double p = q + (1.0 - q) * gpd_cdf(t.gpd, x);
    // keep strictly inside (0,1) so the Laplace/Frechet maps stay finite
    return std::min(p, 1.0 - 1e-15);
  }
  return empirical_cdf_interp(t.sorted, x);
}

inline double semiparametric_quantile(const MarginTransform& t, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error("semiparametric_quantile: p outside (0,1)");
  double q = t.gpd.quantile_level;
  if (p >= q) return gpd_quantile(t.gpd, (p - q) / (1.0 - q));
  return empirical_quantile(t.sorted, std::max(p, 1e-12));
}

// Standard Laplace CDF and quantile.
inline double laplace_cdf(double y) {
  return y <= 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y);
}
inline double laplace_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("laplace_quantile: p outside (0,1)");
  return p <= 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p));
}

inline double to_laplace(const MarginTransform& t, double x) {
  return laplace_quantile(semiparametric_cdf(t, x));
}
inline double from_laplace(const MarginTransform& t, double y) {
  return semiparametric_quantile(t, laplace_cdf(y));
}

// Unit Frechet: z = -1/log p, CDF exp(-1/z).
inline double to_frechet(const MarginTransform& t, double x) {
  return -1.0 / std::log(semiparametric_cdf(t, x));
}
inline double from_frechet(const MarginTransform& t, double z) {
  if (!(z > 0.0)) throw Error("from_frechet: z must be positive");
  return semiparametric_quantile(t, std::exp(-1.0 / z));
}

}  // namespace evtail
