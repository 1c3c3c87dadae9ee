#pragma once

// Conditional multivariate extremes regression on Laplace margins:
//   Y_j = a Y_i + Y_i^b Z,  given Y_i above its dependence threshold,
// with a in [-1, 1] and b < 1. The working likelihood treats Z as normal
// with nuisance (mu, sigma), both profiled out; residuals are stored
// unstandardized and drive prediction by joint resampling.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "evtail/margins.hpp"
#include "evtail/market_data.hpp"
#include "evtail/numeric.hpp"
#include "evtail/optim.hpp"
#include "evtail/prng.hpp"

namespace evtail {

struct HtTarget {
  std::string market_id;
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
  std::vector<double> residuals;  // unstandardized, one per exceedance row
  bool boundary = false;          // |a| = 1
};

struct HtFit {
  std::string conditioning_index;
  double dep_quantile = 0.7;
  double threshold = 0.0;  // Laplace-scale dependence threshold
  std::size_t n_cond_exceed = 0;
  std::vector<HtTarget> targets;
};

struct HtConfig {
  std::size_t min_exceedances = 50;
  int restarts = 5;
  double b_lower = -5.0;  // documented truncation of the b domain
  double sigma_floor = 1e-12;
};

namespace detail {

// Profiled negative log-likelihood for one target: with mu-hat and
// sigma-hat substituted, NLL(a,b) = sum b*log y_i + n*log sigma-hat + const.
struct HtProfile {
  double nll = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

inline HtProfile ht_profile(std::span<const double> yi,
                            std::span<const double> yj, double a, double b,
                            double sigma_floor) {
  const std::size_t n = yi.size();
  std::vector<double> z(n);
  double nll = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double pw = std::pow(yi[k], b);
    z[k] = (yj[k] - a * yi[k]) / pw;
    nll += b * std::log(yi[k]);
  }
  HtProfile out;
  out.mu = mean_of(z);
  out.sigma = std::max(stdev_of(z), sigma_floor);
  out.nll = nll + static_cast<double>(n) * std::log(out.sigma);
  return out;
}

}  // namespace detail

// Fit all targets for one conditioning column of a Laplace-scale panel.
inline HtFit fit_ht(const ReturnPanel& panel,
                    const std::string& conditioning_index, double dep_quantile,
                    const HtConfig& cfg = {}) {
  if (!(dep_quantile > 0.0 && dep_quantile < 1.0))
    throw Error("fit_ht: dep_quantile outside (0,1)");
  std::size_t ci = panel.market_ids.size();
  for (std::size_t j = 0; j < panel.market_ids.size(); ++j)
    if (panel.market_ids[j] == conditioning_index) ci = j;
  if (ci == panel.market_ids.size())
    throw Error("fit_ht: unknown conditioning index");

  HtFit fit;
  fit.conditioning_index = conditioning_index;
  fit.dep_quantile = dep_quantile;
  fit.threshold = laplace_quantile(dep_quantile);

  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < panel.n_rows(); ++t)
    if (panel.returns[ci][t] > fit.threshold) rows.push_back(t);
  fit.n_cond_exceed = rows.size();
  if (rows.size() < cfg.min_exceedances)
    throw Error("fit_ht: too few conditioning exceedances");

  std::vector<double> yi(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    yi[k] = panel.returns[ci][rows[k]];

  for (std::size_t j = 0; j < panel.market_ids.size(); ++j) {
    if (j == ci) continue;
    std::vector<double> yj(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
      yj[k] = panel.returns[j][rows[k]];

    auto obj = [&](const std::vector<double>& t) {
      double a = transform::from_working_box(t[0], -1.0, 1.0);
      double b = transform::from_working_box(t[1], cfg.b_lower, 1.0);
      return detail::ht_profile(yi, yj, a, b, cfg.sigma_floor).nll;
    };
    MinimizeResult best = minimize_restarts(
        obj,
        {transform::to_working_box(0.2, -1.0, 1.0),
         transform::to_working_box(0.1, cfg.b_lower, 1.0)},
        cfg.restarts, 0.8);
    if (!best.converged) throw Error("fit_ht: optimizer non-convergence");

    HtTarget target;
    target.market_id = panel.market_ids[j];
    target.a = transform::from_working_box(best.x[0], -1.0, 1.0);
    target.b = transform::from_working_box(best.x[1], cfg.b_lower, 1.0);

    // The box transform cannot reach |a| = 1 exactly; probe the perfect
    // (anti-)dependence boundaries with b profiled one-dimensionally and
    // snap if they do at least as well.
    for (double ab : {1.0, -1.0}) {
      auto obj_b = [&](double tb) {
        return detail::ht_profile(
                   yi, yj, ab,
                   transform::from_working_box(tb, cfg.b_lower, 1.0),
                   cfg.sigma_floor)
            .nll;
      };
      double tb = golden_section(obj_b, -12.0, 12.0, 1e-9);
      double fb = obj_b(tb);
      if (fb <= best.fmin + 1e-9) {
        best.fmin = fb;
        target.a = ab;
        target.b = transform::from_working_box(tb, cfg.b_lower, 1.0);
        target.boundary = true;
      }
    }

    detail::HtProfile prof = detail::ht_profile(yi, yj, target.a, target.b,
                                                cfg.sigma_floor);
    target.mu = prof.mu;
    target.sigma = prof.sigma;
    target.residuals.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
      target.residuals[k] =
          (yj[k] - target.a * yi[k]) / std::pow(yi[k], target.b);
    fit.targets.push_back(std::move(target));
  }
  return fit;
}

// Sign plus magnitude band for the fitted a.
inline std::string classify_dependence(double a) {
  if (std::fabs(a) > 1.0) throw Error("classify_dependence: |a| > 1");
  if (a == 0.0) return "independence";
  std::string sign = a > 0.0 ? " positive" : " negative";
  double m = std::fabs(a);
  if (m < 0.1) return "very weak" + sign;
  if (m < 0.3) return "weak" + sign;
  if (m < 0.6) return "fairly strong" + sign;
  return "strong" + sign;
}

// Locally weighted scatterplot smoother: tricube weights, local linear fit,
// evaluated at the data abscissae.
inline std::vector<double> lowess_fit(std::span<const double> x,
                                      std::span<const double> y,
                                      double span = 2.0 / 3.0) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw Error("lowess_fit: bad input");
  std::size_t k = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(span * n)));
  k = std::min(k, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x0 = x[i];
    // k nearest by |x - x0| over the sorted order: sliding window
    std::vector<double> dist(n);
    for (std::size_t j = 0; j < n; ++j) dist[j] = std::fabs(x[j] - x0);
    std::vector<double> dsort = dist;
    std::nth_element(dsort.begin(), dsort.begin() + (k - 1), dsort.end());
    double dmax = std::max(dsort[k - 1], 1e-300);
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double u = dist[j] / dmax;
      if (u >= 1.0) continue;
      double w = std::pow(1.0 - u * u * u, 3);
      sw += w;
      swx += w * x[j];
      swy += w * y[j];
      swxx += w * x[j] * x[j];
      swxy += w * x[j] * y[j];
    }
    double det = sw * swxx - swx * swx;
    if (std::fabs(det) < 1e-12 * (1.0 + swxx)) {
      out[i] = swy / sw;  // degenerate abscissae: weighted mean
    } else {
      double beta = (sw * swxy - swx * swy) / det;
      double alpha = (swy - beta * swx) / sw;
      out[i] = alpha + beta * x0;
    }
  }
  return out;
}

struct HtTargetDiagnostics {
  std::string market_id;
  PlotSeries residual_trend;        // Z vs conditioning quantile
  PlotSeries residual_trend_smooth; // lowess curve (empty if suppressed)
  PlotSeries scale_trend;           // |Z - mean Z| vs conditioning quantile
  PlotSeries scale_trend_smooth;
  PlotSeries scatter;               // (Y_i, Y_j) over exceedance rows
  PlotSeries q05, q50, q95;         // fitted conditional quantile curves
};

inline std::vector<HtTargetDiagnostics> ht_diagnostics(
    const HtFit& fit, const ReturnPanel& panel) {
  std::size_t ci = panel.market_ids.size();
  for (std::size_t j = 0; j < panel.market_ids.size(); ++j)
    if (panel.market_ids[j] == fit.conditioning_index) ci = j;
  if (ci == panel.market_ids.size()) throw Error("ht_diagnostics: bad panel");

  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < panel.n_rows(); ++t)
    if (panel.returns[ci][t] > fit.threshold) rows.push_back(t);

  std::vector<double> yi(rows.size()), qi(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    yi[k] = panel.returns[ci][rows[k]];
    qi[k] = laplace_cdf(yi[k]);
  }
  double ymax = *std::max_element(yi.begin(), yi.end());

  std::vector<HtTargetDiagnostics> out;
  for (const HtTarget& target : fit.targets) {
    HtTargetDiagnostics d;
    d.market_id = target.market_id;
    const std::vector<double>& z = target.residuals;
    double zbar = mean_of(z);
    std::vector<double> absdev(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
      absdev[k] = std::fabs(z[k] - zbar);

    d.residual_trend = {"residual_trend", qi, z};
    d.scale_trend = {"scale_trend", qi, absdev};
    if (z.size() >= 10) {
      d.residual_trend_smooth = {"residual_trend_smooth", qi, lowess_fit(qi, z)};
      d.scale_trend_smooth = {"scale_trend_smooth", qi, lowess_fit(qi, absdev)};
    }

    std::size_t tj = 0;
    for (std::size_t j = 0; j < panel.market_ids.size(); ++j)
      if (panel.market_ids[j] == target.market_id) tj = j;
    std::vector<double> yj(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
      yj[k] = panel.returns[tj][rows[k]];
    d.scatter = {"scatter", yi, yj};

    std::vector<double> zs = sorted_copy(z);
    double z05 = empirical_quantile(zs, 0.05);
    double z50 = empirical_quantile(zs, 0.50);
    double z95 = empirical_quantile(zs, 0.95);
    d.q05.name = "q05";
    d.q50.name = "q50";
    d.q95.name = "q95";
    for (int i = 0; i <= 100; ++i) {
      double y = fit.threshold + (ymax - fit.threshold) * i / 100.0;
      double pw = std::pow(y, target.b);
      d.q05.x.push_back(y);
      d.q05.y.push_back(target.a * y + pw * z05);
      d.q50.x.push_back(y);
      d.q50.y.push_back(target.a * y + pw * z50);
      d.q95.x.push_back(y);
      d.q95.y.push_back(target.a * y + pw * z95);
    }
    out.push_back(std::move(d));
  }
  return out;
}

struct PredictionResult {
  std::string conditioning_index;
  double pred_quantile = 0.9;
  double target_quantile = 0.7;  // threshold the targets must exceed
  std::vector<std::string> target_ids;
  std::vector<double> probabilities;
  std::size_t n_importance = 0;
  std::uint64_t seed = 0;
};

// Importance sampling: conditioning values above the pred_quantile Laplace
// quantile (exact Exp(1) tail on the Laplace scale), residual rows resampled
// jointly across targets so cross-target dependence is preserved.
inline PredictionResult predict_exceedance_prob(const HtFit& fit,
                                                double pred_quantile,
                                                std::size_t n_importance,
                                                std::uint64_t seed,
                                                double target_quantile = -1.0) {
  if (pred_quantile < fit.dep_quantile)
    throw Error("predict_exceedance_prob: pred_quantile below dep_quantile");
  if (n_importance == 0) throw Error("predict_exceedance_prob: n_importance 0");
  if (target_quantile < 0.0) target_quantile = fit.dep_quantile;

  const std::size_t n_res =
      fit.targets.empty() ? 0 : fit.targets.front().residuals.size();
  if (n_res == 0) throw Error("predict_exceedance_prob: empty residual set");

  PredictionResult res;
  res.conditioning_index = fit.conditioning_index;
  res.pred_quantile = pred_quantile;
  res.target_quantile = target_quantile;
  res.n_importance = n_importance;
  res.seed = seed;

  double y_pred = laplace_quantile(pred_quantile);
  double y_target = laplace_quantile(target_quantile);
  std::vector<std::size_t> hits(fit.targets.size(), 0);

  CounterRng rng(seed, 101);
  for (std::size_t s = 0; s < n_importance; ++s) {
    double y = y_pred + rng.next_exponential();
    auto row = static_cast<std::size_t>(rng.next_uniform() * n_res);
    if (row >= n_res) row = n_res - 1;
    for (std::size_t j = 0; j < fit.targets.size(); ++j) {
      const HtTarget& t = fit.targets[j];
      double yj = t.a * y + std::pow(y, t.b) * t.residuals[row];
      if (yj > y_target) ++hits[j];
    }
  }
  for (std::size_t j = 0; j < fit.targets.size(); ++j) {
    res.target_ids.push_back(fit.targets[j].market_id);
    res.probabilities.push_back(static_cast<double>(hits[j]) /
                                static_cast<double>(n_importance));
  }
  return res;
}

}  // namespace evtail
