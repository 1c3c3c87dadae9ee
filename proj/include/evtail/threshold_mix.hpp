#pragma once

// Kernel-GPD extreme value mixture model: Gaussian-kernel density bulk below
// the threshold, GPD tail above, with either the bulk-implied tail fraction
// (phi_u = 1 - H(u)) or a free parameterised tail fraction. Gives an
// objective threshold estimate with a profile-likelihood standard error.
//
// The bulk bandwidth starts at the leave-one-out cross-validation optimum
// and is then polished jointly with (u, sigma, xi). Likelihood evaluations
// during search use a linearly binned KDE; all reported quantities are
// recomputed with the exact KDE.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "evtail/gpd.hpp"
#include "evtail/margins.hpp"
#include "evtail/numeric.hpp"
#include "evtail/optim.hpp"

namespace evtail {

enum class TailMode { bulk_based, parameterised };

struct MixtureFit {
  double gamma = 0.0;  // kernel bandwidth
  double u = 0.0;
  double sigma_u = 1.0;
  double xi = 0.0;
  double phi_u = 0.0;  // tail fraction
  TailMode tail_mode = TailMode::bulk_based;
  double loglik = 0.0;
  double se_u = 0.0;
  bool u_outside_band = false;
  std::vector<double> sorted;                 // sample, ascending
  std::vector<double> profile_q, profile_ll;  // (quantile level, loglik) trace
};

struct MixtureConfig {
  std::size_t min_sample = 200;
  std::size_t grid_points = 50;  // u-profile candidates in (0.5, 0.99)
  double band_lo = 0.5, band_hi = 0.99;
  std::size_t kde_bins = 2048;
  int polish_evals = 80;
};

inline double kde_density(std::span<const double> sample, double gamma,
                          double x) {
  double s = 0.0;
  for (double xi : sample) s += norm_pdf((x - xi) / gamma);
  return s / (static_cast<double>(sample.size()) * gamma);
}

inline double kde_cdf(std::span<const double> sample, double gamma, double x) {
  double s = 0.0;
  for (double xi : sample) s += norm_cdf((x - xi) / gamma);
  return s / static_cast<double>(sample.size());
}

namespace detail {

// Linear binning of the sample onto a uniform grid, for fast repeated KDE
// evaluation during optimization.
struct BinnedSample {
  double lo = 0.0, step = 1.0;
  std::vector<double> weight;  // per grid node, sums to n

  void build(std::span<const double> sorted, std::size_t m, double pad) {
    lo = sorted.front() - pad;
    double hi = sorted.back() + pad;
    step = (hi - lo) / static_cast<double>(m - 1);
    weight.assign(m, 0.0);
    for (double x : sorted) {
      double pos = (x - lo) / step;
      auto b = static_cast<std::size_t>(pos);
      if (b >= m - 1) b = m - 2;
      double frac = pos - static_cast<double>(b);
      weight[b] += 1.0 - frac;
      weight[b + 1] += frac;
    }
  }

  // KDE density at every grid node; kernel truncated at 8 bandwidths.
  std::vector<double> density_grid(double gamma, double n) const {
    const std::size_t m = weight.size();
    auto reach = static_cast<std::size_t>(std::ceil(8.0 * gamma / step)) + 1;
    std::vector<double> f(m, 0.0);
    for (std::size_t b = 0; b < m; ++b) {
      if (weight[b] == 0.0) continue;
      std::size_t j0 = b > reach ? b - reach : 0;
      std::size_t j1 = std::min(m - 1, b + reach);
      for (std::size_t j = j0; j <= j1; ++j)
        f[j] += weight[b] * norm_pdf((static_cast<double>(j) -
                                      static_cast<double>(b)) *
                                     step / gamma);
    }
    for (double& v : f) v /= n * gamma;
    return f;
  }

  double interp(const std::vector<double>& grid, double x) const {
    double pos = (x - lo) / step;
    if (pos <= 0.0) return grid.front();
    auto b = static_cast<std::size_t>(pos);
    if (b >= grid.size() - 1) return grid.back();
    double frac = pos - static_cast<double>(b);
    return grid[b] * (1.0 - frac) + grid[b + 1] * frac;
  }
};

// Leave-one-out cross-validation log-likelihood of the bandwidth.
inline double loo_loglik(const BinnedSample& bins,
                         std::span<const double> sample, double gamma) {
  const double n = static_cast<double>(sample.size());
  std::vector<double> grid = bins.density_grid(gamma, n);
  double self = norm_pdf(0.0) / (n * gamma);
  double ll = 0.0;
  for (double x : sample) {
    double f = bins.interp(grid, x) - self;
    ll += std::log(std::max(f * n / (n - 1.0), 1e-300));
  }
  return ll;
}

// MLE for a plain excess vector (threshold already subtracted).
inline void fit_gpd_excess(std::span<const double> excess, double* sigma,
                           double* xi, double* nll) {
  double s0, x0;
  gpd_pwm_start(excess, &s0, &x0);
  auto obj = [&](const std::vector<double>& p) {
    return gpd_nll(excess, p[0], p[1]);
  };
  MinimizeResult r = minimize_restarts(obj, {std::log(s0), x0}, 2, 0.2);
  *sigma = std::exp(r.x[0]);
  *xi = r.x[1];
  *nll = r.fmin;
}

}  // namespace detail

// Exact mixture CDF: bulk below u, (1 - phi) + phi * G above.
inline double mixture_cdf(const MixtureFit& fit, double x) {
  GpdFit g;
  g.threshold = fit.u;
  g.sigma = fit.sigma_u;
  g.xi = fit.xi;
  if (x > fit.u) return (1.0 - fit.phi_u) + fit.phi_u * gpd_cdf(g, x);
  double h = kde_cdf(fit.sorted, fit.gamma, x);
  if (fit.tail_mode == TailMode::bulk_based) return h;
  double hu = kde_cdf(fit.sorted, fit.gamma, fit.u);
  return (1.0 - fit.phi_u) * h / hu;
}

inline double mixture_density(const MixtureFit& fit, double x) {
  GpdFit g;
  g.threshold = fit.u;
  g.sigma = fit.sigma_u;
  g.xi = fit.xi;
  if (x > fit.u) return fit.phi_u * gpd_density(g, x);
  double h = kde_density(fit.sorted, fit.gamma, x);
  if (fit.tail_mode == TailMode::bulk_based) return h;
  double hu = kde_cdf(fit.sorted, fit.gamma, fit.u);
  return (1.0 - fit.phi_u) * h / hu;
}

inline MixtureFit fit_mixture(std::span<const double> sample,
                              TailMode tail_mode,
                              const MixtureConfig& cfg = {}) {
  if (sample.size() < cfg.min_sample) throw Error("fit_mixture: sample too small");
  MixtureFit fit;
  fit.tail_mode = tail_mode;
  fit.sorted = sorted_copy(sample);
  const double n = static_cast<double>(sample.size());

  double sd = stdev_of(sample);
  double iqr = empirical_quantile(fit.sorted, 0.75) -
               empirical_quantile(fit.sorted, 0.25);
  if (!(sd > 0.0) || !(iqr > 0.0))
    throw Error("fit_mixture: degenerate kernel");
  double g0 = 0.9 * std::min(sd, iqr / 1.34) * std::pow(n, -0.2);

  detail::BinnedSample bins;
  bins.build(fit.sorted, cfg.kde_bins, 8.0 * g0 * 4.0);

  // Stage 1: cross-validation bandwidth.
  auto neg_cv = [&](double lg) {
    return -detail::loo_loglik(bins, sample, std::exp(lg));
  };
  double lg = golden_section(neg_cv, std::log(g0) - 2.0, std::log(g0) + 2.0,
                             1e-4);
  fit.gamma = std::exp(lg);

  // Stage 2: profile likelihood over candidate thresholds. The bulk term
  // uses prefix sums of per-point log KDE density, so each candidate costs
  // one small GPD fit.
  // Bulk terms are always leave-one-out corrected: the plain KDE likelihood
  // is degenerate in gamma (it diverges as gamma -> 0 at the data points).
  std::vector<double> grid = bins.density_grid(fit.gamma, n);
  double self = norm_pdf(0.0) / (n * fit.gamma);
  std::vector<double> prefix(fit.sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < fit.sorted.size(); ++i) {
    double d = (bins.interp(grid, fit.sorted[i]) - self) * n / (n - 1.0);
    prefix[i + 1] = prefix[i] + std::log(std::max(d, 1e-300));
  }

  struct Cand {
    double u, ll, sigma, xi, phi;
  };
  auto eval_u = [&](double u) {
    Cand c;
    c.u = u;
    auto nb = static_cast<std::size_t>(
        std::upper_bound(fit.sorted.begin(), fit.sorted.end(), u) -
        fit.sorted.begin());
    std::size_t nt = fit.sorted.size() - nb;
    if (nt < 10 || nb < 10) {
      c.ll = -1e15;
      return c;
    }
    std::vector<double> excess(fit.sorted.begin() + nb, fit.sorted.end());
    for (double& e : excess) e -= u;
    double nll_tail;
    detail::fit_gpd_excess(excess, &c.sigma, &c.xi, &nll_tail);
    double hu = kde_cdf(fit.sorted, fit.gamma, u);
    if (tail_mode == TailMode::bulk_based) {
      c.phi = 1.0 - hu;
      c.ll = prefix[nb] + static_cast<double>(nt) * std::log(c.phi) - nll_tail;
    } else {
      c.phi = static_cast<double>(nt) / n;  // analytic profile optimum
      c.ll = prefix[nb] +
             static_cast<double>(nb) * (std::log1p(-c.phi) - std::log(hu)) +
             static_cast<double>(nt) * std::log(c.phi) - nll_tail;
    }
    return c;
  };

  Cand best{0, -1e300, 1, 0, 0};
  double best_q = cfg.band_lo;
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    double q = cfg.band_lo + (cfg.band_hi - cfg.band_lo) *
                                 (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(cfg.grid_points);
    Cand c = eval_u(empirical_quantile(fit.sorted, q));
    fit.profile_q.push_back(q);
    fit.profile_ll.push_back(c.ll);
    if (c.ll > best.ll) {
      best = c;
      best_q = q;
    }
  }
  if (best.ll < -1e14) throw Error("fit_mixture: non-convergence");

  // Golden-section refinement between the neighbouring candidates.
  double dq = (cfg.band_hi - cfg.band_lo) / static_cast<double>(cfg.grid_points);
  double qlo = std::max(cfg.band_lo, best_q - dq);
  double qhi = std::min(cfg.band_hi, best_q + dq);
  double q_ref = golden_section(
      [&](double q) { return -eval_u(empirical_quantile(fit.sorted, q)).ll; },
      qlo, qhi, 1e-4);
  Cand refined = eval_u(empirical_quantile(fit.sorted, q_ref));
  if (refined.ll > best.ll) best = refined;

  // Stage 3: short joint polish over (log gamma, u, log sigma, xi).
  auto joint = [&](const std::vector<double>& p) {
    double gamma = std::exp(p[0]);
    double u = p[1];
    if (u <= empirical_quantile(fit.sorted, cfg.band_lo) ||
        u >= empirical_quantile(fit.sorted, cfg.band_hi))
      return 1e15;
    auto nb = static_cast<std::size_t>(
        std::upper_bound(fit.sorted.begin(), fit.sorted.end(), u) -
        fit.sorted.begin());
    std::size_t nt = fit.sorted.size() - nb;
    if (nt < 10 || nb < 10) return 1e15;
    std::vector<double> g2 = bins.density_grid(gamma, n);
    double self2 = norm_pdf(0.0) / (n * gamma);
    double bulk = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
      double d = (bins.interp(g2, fit.sorted[i]) - self2) * n / (n - 1.0);
      bulk += std::log(std::max(d, 1e-300));
    }
    std::vector<double> excess(fit.sorted.begin() + nb, fit.sorted.end());
    for (double& e : excess) e -= u;
    double nll_tail = detail::gpd_nll(excess, p[2], p[3]);
    double hu = kde_cdf(fit.sorted, gamma, u);
    double ll;
    if (tail_mode == TailMode::bulk_based) {
      ll = bulk + static_cast<double>(nt) * std::log1p(-hu) - nll_tail;
    } else {
      double phi = static_cast<double>(nt) / n;
      ll = bulk +
           static_cast<double>(nb) * (std::log1p(-phi) - std::log(hu)) +
           static_cast<double>(nt) * std::log(phi) - nll_tail;
    }
    return -ll;
  };
  MinimizeResult pol =
      nelder_mead(joint, {std::log(fit.gamma), best.u, std::log(best.sigma),
                          best.xi},
                  0.05, 1e-9, cfg.polish_evals);
  if (-pol.fmin > best.ll) {
    fit.gamma = std::exp(pol.x[0]);
    Cand c = eval_u(pol.x[1]);  // re-profile tail exactly at the polished u
    if (c.ll > best.ll) best = c;
  }

  fit.u = best.u;
  fit.sigma_u = best.sigma;
  fit.xi = best.xi;
  fit.loglik = best.ll;
  fit.phi_u = tail_mode == TailMode::bulk_based
                  ? 1.0 - kde_cdf(fit.sorted, fit.gamma, fit.u)
                  : best.phi;

  // se_u from the curvature of the u-profile log-likelihood.
  double du = 0.25 * dq * (empirical_quantile(fit.sorted, 0.95) -
                           empirical_quantile(fit.sorted, 0.55)) /
              (0.95 - 0.55);
  double lp = eval_u(fit.u + du).ll, lm = eval_u(fit.u - du).ll;
  double curv = -(lp - 2.0 * best.ll + lm) / (du * du);
  fit.se_u = curv > 0.0 ? 1.0 / std::sqrt(curv) : 0.0;

  double band_lo_u = empirical_quantile(fit.sorted, cfg.band_lo);
  double band_hi_u = empirical_quantile(fit.sorted, cfg.band_hi);
  fit.u_outside_band = fit.u <= band_lo_u + 1e-12 || fit.u >= band_hi_u - 1e-12;
  return fit;
}

// Empirical quantile level of the fitted threshold, with its delta-method
// standard error, for use as the gpd module's quantile_level.
inline std::pair<double, double> suggest_threshold(
    std::span<const double> sample, const MixtureConfig& cfg = {}) {
  MixtureFit fit = fit_mixture(sample, TailMode::bulk_based, cfg);
  double level = empirical_cdf_interp(fit.sorted, fit.u);
  double dens = kde_density(fit.sorted, fit.gamma, fit.u);
  return {level, dens * fit.se_u};
}

}  // namespace evtail
