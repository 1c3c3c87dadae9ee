#pragma once

// Generalized Pareto fitting for threshold excesses by maximum likelihood,
// with the four classical diagnostics (probability, quantile, return level,
// density). The threshold is always specified as an empirical quantile
// level; probability-weighted-moment estimates seed a restarted simplex
// search over (log sigma, xi).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "evtail/numeric.hpp"
#include "evtail/optim.hpp"

namespace evtail {

struct GpdFit {
  double threshold = 0.0;
  double quantile_level = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
  std::size_t n_exceed = 0;
  double loglik = 0.0;
  double se_sigma = 0.0;
  double se_xi = 0.0;
  bool unreliable_mle = false;  // xi <= -0.5
};

struct GpdConfig {
  std::size_t min_exceedances = 30;
  int restarts = 5;
  double hessian_step = 1e-5;
};

// CDF of excesses: G(x) = 1 - (1 + xi (x-u)/sigma)^(-1/xi), exponential
// limit for |xi| < 1e-8.
inline double gpd_cdf(const GpdFit& fit, double x) {
  if (x < fit.threshold) throw Error("gpd_cdf: x below threshold");
  double z = (x - fit.threshold) / fit.sigma;
  if (std::fabs(fit.xi) < 1e-8) return -std::expm1(-z);
  double t = 1.0 + fit.xi * z;
  if (t <= 0.0) {
    if (fit.xi < 0.0) return 1.0;  // beyond the upper endpoint
    throw Error("gpd_cdf: x outside support");
  }
  return 1.0 - std::pow(t, -1.0 / fit.xi);
}

inline double gpd_quantile(const GpdFit& fit, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("gpd_quantile: p outside [0,1)");
  if (std::fabs(fit.xi) < 1e-8)
    return fit.threshold - fit.sigma * std::log1p(-p);
  return fit.threshold +
         fit.sigma * std::expm1(-fit.xi * std::log1p(-p)) / fit.xi;
}

inline double gpd_density(const GpdFit& fit, double x) {
  double z = (x - fit.threshold) / fit.sigma;
  if (z < 0.0) return 0.0;
  if (std::fabs(fit.xi) < 1e-8) return std::exp(-z) / fit.sigma;
  double t = 1.0 + fit.xi * z;
  if (t <= 0.0) return 0.0;
  return std::pow(t, -1.0 / fit.xi - 1.0) / fit.sigma;
}

namespace detail {

// Negative log-likelihood of excesses for working parameters
// (log sigma, xi). Out-of-support points make the fit infeasible.
inline double gpd_nll(std::span<const double> excess, double log_sigma,
                      double xi) {
  double sigma = std::exp(log_sigma);
  double nll = excess.size() * log_sigma;
  if (std::fabs(xi) < 1e-8) {
    for (double x : excess) nll += x / sigma;
    return nll;
  }
  for (double x : excess) {
    double t = 1.0 + xi * x / sigma;
    if (t <= 0.0) return 1e12;
    nll += (1.0 + 1.0 / xi) * std::log(t);
  }
  return nll;
}

// Hosking-Wallis probability-weighted-moment starting values.
inline void gpd_pwm_start(std::span<const double> excess, double* sigma,
                          double* xi) {
  std::vector<double> xs = sorted_copy(excess);
  const double n = static_cast<double>(xs.size());
  double b0 = 0.0, b1 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    b0 += xs[i];
    b1 += xs[i] * (static_cast<double>(xs.size() - 1 - i)) / (n - 1.0);
  }
  b0 /= n;
  b1 /= n;
  double denom = b0 - 2.0 * b1;
  if (denom <= 1e-300) {
    *sigma = b0 > 0 ? b0 : 1.0;
    *xi = 0.1;
    return;
  }
  *xi = 2.0 - b0 / denom;
  *sigma = 2.0 * b0 * b1 / denom;
  if (!(*sigma > 0.0)) *sigma = b0;
  *xi = std::clamp(*xi, -0.45, 0.9);
}

}  // namespace detail

// MLE for excesses above the empirical quantile_level quantile of `sample`.
inline GpdFit fit_gpd(std::span<const double> sample, double quantile_level,
                      const GpdConfig& cfg = {}) {
  if (!(quantile_level > 0.0 && quantile_level < 1.0))
    throw Error("fit_gpd: quantile_level outside (0,1)");
  std::vector<double> sorted = sorted_copy(sample);
  double u = empirical_quantile(sorted, quantile_level);
  std::vector<double> excess;
  for (double x : sample)
    if (x > u) excess.push_back(x - u);
  if (excess.size() < cfg.min_exceedances) throw Error("too few exceedances");

  double sigma0, xi0;
  detail::gpd_pwm_start(excess, &sigma0, &xi0);
  auto obj = [&](const std::vector<double>& p) {
    return detail::gpd_nll(excess, p[0], p[1]);
  };
  MinimizeResult best =
      minimize_restarts(obj, {std::log(sigma0), xi0}, cfg.restarts, 0.2);
  if (!best.converged) throw Error("fit_gpd: optimizer non-convergence");

  GpdFit fit;
  fit.threshold = u;
  fit.quantile_level = quantile_level;
  fit.sigma = std::exp(best.x[0]);
  fit.xi = best.x[1];
  fit.n_exceed = excess.size();
  fit.loglik = -best.fmin;
  fit.unreliable_mle = fit.xi <= -0.5;

  // Standard errors from the observed information on the working scale,
  // mapped back by the delta method for sigma.
  auto cov = invert_matrix(numerical_hessian(obj, best.x, cfg.hessian_step));
  if (!cov.empty() && cov[0][0] > 0.0 && cov[1][1] > 0.0) {
    fit.se_sigma = fit.sigma * std::sqrt(cov[0][0]);
    fit.se_xi = std::sqrt(cov[1][1]);
  }
  return fit;
}

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

struct GpdDiagnostics {
  PlotSeries probability;   // empirical vs model probabilities
  PlotSeries quantile;      // model vs empirical quantiles
  PlotSeries return_level;  // return period (observations) vs level
  PlotSeries density;       // histogram bin centers vs bin density
  PlotSeries density_model; // model density on a fine grid
};

inline GpdDiagnostics gpd_diagnostics(const GpdFit& fit,
                                      std::span<const double> sample,
                                      std::size_t hist_bins = 20) {
  std::vector<double> excess;
  for (double x : sample)
    if (x > fit.threshold) excess.push_back(x - fit.threshold);
  std::sort(excess.begin(), excess.end());
  const std::size_t k = excess.size();
  if (k < 2 || hist_bins < 1 || k < hist_bins / 4)
    throw Error("gpd_diagnostics: too few excesses");

  GpdDiagnostics d;
  d.probability.name = "probability";
  d.quantile.name = "quantile";
  d.return_level.name = "return_level";
  d.density.name = "density";
  d.density_model.name = "density_model";

  GpdFit shifted = fit;
  shifted.threshold = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double p_emp = static_cast<double>(i + 1) / (k + 1);
    d.probability.x.push_back(p_emp);
    d.probability.y.push_back(gpd_cdf(shifted, excess[i]));
    d.quantile.x.push_back(gpd_quantile(shifted, p_emp));
    d.quantile.y.push_back(excess[i]);
  }

  // Return level: level for return period m observations is the
  // (1 - 1/(m*zeta_u)) GPD quantile above u, zeta_u = exceedance rate.
  double zeta = static_cast<double>(k) / sample.size();
  for (double log_m = std::log10(1.0 / zeta) + 0.05; log_m <= 5.0;
       log_m += 0.05) {
    double m = std::pow(10.0, log_m);
    double p = 1.0 - 1.0 / (m * zeta);
    if (p <= 0.0 || p >= 1.0) continue;
    d.return_level.x.push_back(m);
    d.return_level.y.push_back(fit.threshold + gpd_quantile(shifted, p));
  }

  double width = excess.back() / hist_bins;
  std::vector<double> counts(hist_bins, 0.0);
  for (double x : excess) {
    auto b = std::min<std::size_t>(hist_bins - 1,
                                   static_cast<std::size_t>(x / width));
    counts[b] += 1.0;
  }
  for (std::size_t b = 0; b < hist_bins; ++b) {
    d.density.x.push_back((b + 0.5) * width);
    d.density.y.push_back(counts[b] / (k * width));
  }
  for (int i = 0; i <= 200; ++i) {
    double x = excess.back() * i / 200.0;
    d.density_model.x.push_back(x);
    d.density_model.y.push_back(gpd_density(shifted, x));
  }
  return d;
}

}  // namespace evtail
