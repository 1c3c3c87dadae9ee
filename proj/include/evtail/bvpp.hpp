#pragma once

// Bivariate point-process dependence model on unit-Frechet margins.
//
// Six parametric spectral families, each given by its exponent function
// V(x, y) (so that G = exp(-V)) and interior spectral density
// h(w) = -1/2 * d2V/dxdy at (w, 1-w). Exceedances of a radial threshold are
// fitted by the Poisson-process likelihood
//   l(theta) = -2/r0 + sum_{r_i > r0} [log 2 + log h(w_i) - 2 log r_i],
// whose theta-dependent part is sum log h(w_i). Families are ranked by AIC.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evtail/numeric.hpp"
#include "evtail/optim.hpp"

namespace evtail {

enum class FamilyTag {
  logistic,
  neg_logistic,
  husler_reiss,
  bilogistic,
  neg_bilogistic,
  coles_tawn,
};

constexpr std::array<FamilyTag, 6> all_families{
    FamilyTag::logistic,      FamilyTag::neg_logistic,
    FamilyTag::husler_reiss,  FamilyTag::bilogistic,
    FamilyTag::neg_bilogistic, FamilyTag::coles_tawn};

inline const char* family_name(FamilyTag t) {
  switch (t) {
    case FamilyTag::logistic: return "logistic";
    case FamilyTag::neg_logistic: return "neg_logistic";
    case FamilyTag::husler_reiss: return "husler_reiss";
    case FamilyTag::bilogistic: return "bilogistic";
    case FamilyTag::neg_bilogistic: return "neg_bilogistic";
    case FamilyTag::coles_tawn: return "coles_tawn";
  }
  return "?";
}

inline std::optional<FamilyTag> family_from_name(const std::string& s) {
  for (FamilyTag t : all_families)
    if (s == family_name(t)) return t;
  return std::nullopt;
}

struct DependenceFamily {
  FamilyTag tag = FamilyTag::logistic;
  double alpha = 0.5;
  double beta = 0.0;  // unused for one-parameter families

  int param_count() const {
    switch (tag) {
      case FamilyTag::logistic:
      case FamilyTag::neg_logistic:
      case FamilyTag::husler_reiss:
        return 1;
      default:
        return 2;
    }
  }

  bool in_domain() const {
    switch (tag) {
      case FamilyTag::logistic: return alpha > 0.0 && alpha <= 1.0;
      case FamilyTag::neg_logistic: return alpha > 0.0;
      case FamilyTag::husler_reiss: return alpha > 0.0;
      case FamilyTag::bilogistic:
        return alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0;
      case FamilyTag::neg_bilogistic: return alpha > 0.0 && beta > 0.0;
      case FamilyTag::coles_tawn: return alpha > 0.0 && beta > 0.0;
    }
    return false;
  }
};

// (r, w) = (x + y, x / (x + y)).
inline std::pair<double, double> pseudo_polar(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw Error("pseudo_polar: nonpositive input");
  return {x + y, x / (x + y)};
}
inline std::pair<double, double> pseudo_polar_inverse(double r, double w) {
  return {r * w, r * (1.0 - w)};
}

namespace detail {

// Implicit roots for the (negative) bilogistic family, solved on the logit
// scale so extreme coordinate ratios stay well conditioned. Newton with a
// bisection safeguard; g is strictly monotone in t.
template <typename G, typename DG>
double logit_root(G&& g, DG&& dg) {
  // Wide bracket: the root logit scales like log(coordinate ratio) divided by
  // the smallest shape parameter, far beyond +-700 for extreme ratios.
  double lo = -1e6, hi = 1e6;
  double t = 0.0;
  for (int it = 0; it < 200; ++it) {
    double gt = g(t);
    if (gt > 0.0)
      lo = t;
    else
      hi = t;
    double step = gt / dg(t);
    double tn = t - step;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (std::fabs(tn - t) < 1e-14 * (1.0 + std::fabs(t))) return tn;
    t = tn;
  }
  return t;
}

inline double log_sigmoid(double t) {
  return t > 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

// Root q of (1-a)(1-q)^b / x = (1-b) q^a / y (bilogistic), decreasing in q,
// returned as the logit of q so log q / log(1-q) stay exact in the tails.
inline double bilog_root_logit(double x, double y, double a, double b) {
  double c = std::log1p(-a) - std::log(x) - std::log1p(-b) + std::log(y);
  auto g = [&](double t) {
    return c + b * log_sigmoid(-t) - a * log_sigmoid(t);
  };
  auto dg = [&](double t) {
    double s = 1.0 / (1.0 + std::exp(-t));
    return -b * s - a * (1.0 - s);
  };
  return logit_root(g, dg);
}

inline double bilog_root(double x, double y, double a, double b) {
  return 1.0 / (1.0 + std::exp(-bilog_root_logit(x, y, a, b)));
}

// Root q of (1+a) q^a / x = (1+b)(1-q)^b / y (negative bilogistic),
// increasing in q, so negate for the solver's sign convention.
inline double negbilog_root_logit(double x, double y, double a, double b) {
  double c = std::log1p(a) - std::log(x) - std::log1p(b) + std::log(y);
  auto g = [&](double t) {
    return -(c + a * log_sigmoid(t) - b * log_sigmoid(-t));
  };
  auto dg = [&](double t) {
    double s = 1.0 / (1.0 + std::exp(-t));
    return -(a * (1.0 - s) + b * s);
  };
  return logit_root(g, dg);
}

inline double negbilog_root(double x, double y, double a, double b) {
  return 1.0 / (1.0 + std::exp(-negbilog_root_logit(x, y, a, b)));
}

inline double logsumexp2(double p, double q) {
  double m = std::max(p, q);
  return m + std::log(std::exp(p - m) + std::exp(q - m));
}

}  // namespace detail

// Exponent function V(x, y); homogeneous of order -1 with V(x, inf) = 1/x.
inline double exponent_V(const DependenceFamily& f, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw Error("exponent_V: nonpositive input");
  if (!f.in_domain()) throw Error("exponent_V: params out of domain");
  const double a = f.alpha, b = f.beta;
  switch (f.tag) {
    case FamilyTag::logistic: {
      if (a == 1.0) return 1.0 / x + 1.0 / y;
      // log-space: direct powers underflow for small alpha
      double ls = detail::logsumexp2(-std::log(x) / a, -std::log(y) / a);
      return std::exp(a * ls);
    }
    case FamilyTag::neg_logistic:
      return 1.0 / x + 1.0 / y -
             std::pow(std::pow(x, a) + std::pow(y, a), -1.0 / a);
    case FamilyTag::husler_reiss: {
      double l = std::log(y / x);
      double z1 = 1.0 / a + 0.5 * a * l;
      double z2 = 1.0 / a - 0.5 * a * l;
      return norm_cdf(z1) / x + norm_cdf(z2) / y;
    }
    case FamilyTag::bilogistic: {
      double q = detail::bilog_root(x, y, a, b);
      return std::pow(q, 1.0 - a) / x + std::pow(1.0 - q, 1.0 - b) / y;
    }
    case FamilyTag::neg_bilogistic: {
      double q = detail::negbilog_root(x, y, a, b);
      return 1.0 / x + 1.0 / y - std::pow(q, 1.0 + a) / x -
             std::pow(1.0 - q, 1.0 + b) / y;
    }
    case FamilyTag::coles_tawn: {
      double q = a * x / (a * x + b * y);
      return (1.0 - inc_beta(a + 1.0, b, q)) / x + inc_beta(a, b + 1.0, q) / y;
    }
  }
  return 0.0;
}

// dV/dx, needed for conditional simulation.
inline double exponent_V_x(const DependenceFamily& f, double x, double y) {
  const double a = f.alpha, b = f.beta;
  switch (f.tag) {
    case FamilyTag::logistic: {
      if (a == 1.0) return -1.0 / (x * x);
      double lx = std::log(x);
      double ls = detail::logsumexp2(-lx / a, -std::log(y) / a);
      return -std::exp((a - 1.0) * ls + (-1.0 / a - 1.0) * lx);
    }
    case FamilyTag::neg_logistic: {
      double s = std::pow(x, a) + std::pow(y, a);
      return -1.0 / (x * x) +
             std::pow(s, -1.0 / a - 1.0) * std::pow(x, a - 1.0);
    }
    case FamilyTag::husler_reiss: {
      double l = std::log(y / x);
      double z1 = 1.0 / a + 0.5 * a * l;
      double z2 = 1.0 / a - 0.5 * a * l;
      return -norm_cdf(z1) / (x * x) - 0.5 * a * norm_pdf(z1) / (x * x) +
             0.5 * a * norm_pdf(z2) / (x * y);
    }
    case FamilyTag::bilogistic: {
      // Terms in dq/dx cancel through the defining equation.
      double q = detail::bilog_root(x, y, a, b);
      return -std::pow(q, 1.0 - a) / (x * x);
    }
    case FamilyTag::neg_bilogistic: {
      double q = detail::negbilog_root(x, y, a, b);
      return -(1.0 - std::pow(q, 1.0 + a)) / (x * x);
    }
    case FamilyTag::coles_tawn: {
      double q = a * x / (a * x + b * y);
      double dqdx = a * b * y / ((a * x + b * y) * (a * x + b * y));
      double lb_ab = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
      // densities of Beta(a+1,b) and Beta(a,b+1) share B(a,b) up to factors
      double dens1 = std::exp(a * std::log(q) + (b - 1.0) * std::log1p(-q) -
                              lb_ab) *
                     (a + b) / a;
      double dens2 = std::exp((a - 1.0) * std::log(q) + b * std::log1p(-q) -
                              lb_ab) *
                     (a + b) / b;
      return -(1.0 - inc_beta(a + 1.0, b, q)) / (x * x) - dens1 * dqdx / x +
             dens2 * dqdx / y;
    }
  }
  return 0.0;
}

// Spectral density h(w) = -1/2 d2V/dxdy at (w, 1-w); total mass 1, mean 1/2.
// The overload taking the complement cw = 1 - w explicitly lets quadrature
// resolve the integrable singularity at w -> 1 beyond the spacing of doubles.
inline double spectral_density_h(const DependenceFamily& f, double w,
                                 double cw) {
  if (!(w > 0.0 && cw > 0.0))
    throw Error("spectral_density_h: w outside (0,1)");
  if (!f.in_domain()) throw Error("spectral_density_h: params out of domain");
  const double a = f.alpha, b = f.beta;
  const double x = w, y = cw;
  switch (f.tag) {
    case FamilyTag::logistic: {
      // log-space evaluation: the w -> 0/1 singularities would otherwise
      // overflow intermediate powers long before h itself does
      if (a == 1.0) return 0.0;
      double lx = std::log(x), ly = std::log(y);
      double ls = detail::logsumexp2(-lx / a, -ly / a);
      return 0.5 * (1.0 / a - 1.0) *
             std::exp((-1.0 - 1.0 / a) * (lx + ly) + (a - 2.0) * ls);
    }
    case FamilyTag::neg_logistic: {
      double s = std::pow(x, a) + std::pow(y, a);
      return 0.5 * (1.0 + a) * std::pow(x * y, a - 1.0) *
             std::pow(s, -1.0 / a - 2.0);
    }
    case FamilyTag::husler_reiss: {
      double lx = std::log(x), ly = std::log(y);
      double l = ly - lx;
      double z1 = 1.0 / a + 0.5 * a * l;
      double z2 = 1.0 / a - 0.5 * a * l;
      const double lsqrt2pi = 0.91893853320467274178;
      double t1 = (0.25 * a * a * z1 - 0.5 * a) *
                  std::exp(-0.5 * z1 * z1 - lsqrt2pi - 2.0 * lx - ly);
      double t2 = (0.25 * a * a * z2 - 0.5 * a) *
                  std::exp(-0.5 * z2 * z2 - lsqrt2pi - lx - 2.0 * ly);
      return -0.5 * (t1 + t2);
    }
    case FamilyTag::bilogistic: {
      double t = detail::bilog_root_logit(x, y, a, b);
      double lq = detail::log_sigmoid(t), l1q = detail::log_sigmoid(-t);
      double lx = std::log(x), ly = std::log(y);
      double d1 = std::log(b * (1.0 - a)) + (b - 1.0) * l1q - lx;
      double d2 = std::log(a * (1.0 - b)) + (a - 1.0) * lq - ly;
      return 0.5 * (1.0 - a) * (1.0 - b) *
             std::exp(-2.0 * (lx + ly) - detail::logsumexp2(d1, d2));
    }
    case FamilyTag::neg_bilogistic: {
      double t = detail::negbilog_root_logit(x, y, a, b);
      double lq = detail::log_sigmoid(t), l1q = detail::log_sigmoid(-t);
      double lx = std::log(x), ly = std::log(y);
      double d1 = std::log(a * (1.0 + a)) + (a - 1.0) * lq - lx;
      double d2 = std::log(b * (1.0 + b)) + (b - 1.0) * l1q - ly;
      return 0.5 * (1.0 + a) * (1.0 + b) *
             std::exp(a * lq + b * l1q - 2.0 * (lx + ly) -
                      detail::logsumexp2(d1, d2));
    }
    case FamilyTag::coles_tawn: {
      double lk = a * std::log(a) + b * std::log(b) + std::log(a + b) -
                  (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
      double s = a * x + b * y;
      return 0.5 * std::exp(lk + (a - 1.0) * std::log(x) +
                            (b - 1.0) * std::log(y) -
                            (a + b + 1.0) * std::log(s));
    }
  }
  return 0.0;
}

inline double spectral_density_h(const DependenceFamily& f, double w) {
  if (!(w > 0.0 && w < 1.0)) throw Error("spectral_density_h: w outside (0,1)");
  return spectral_density_h(f, w, 1.0 - w);
}

inline double log_spectral_density_h(const DependenceFamily& f, double w) {
  double h = spectral_density_h(f, w);
  return h > 0.0 ? std::log(h) : -1e12;
}

// Dependence summary chi = 2 - V(1,1): 0 at independence, 1 at complete
// dependence.
inline double dependence_chi(const DependenceFamily& f) {
  return 2.0 - exponent_V(f, 1.0, 1.0);
}

struct PpFit {
  DependenceFamily family;
  double loglik = 0.0;        // full Poisson-process log-likelihood
  double loglik_theta = 0.0;  // theta-dependent part, sum log h(w_i)
  double aic = 0.0;
  std::vector<double> se;
  std::size_t n_points = 0;
  double r0 = 0.0;  // radial threshold on the 1/n-scaled Frechet scale
  std::vector<std::pair<double, double>> points;  // (r, w), r > r0
  bool boundary = false;
};

struct PpConfig {
  int restarts = 5;
  std::size_t min_points = 30;
  double hessian_step = 1e-5;
};

namespace detail {

// Per-family map between natural parameters and the unconstrained working
// scale used by the simplex search.
inline std::vector<double> pp_to_working(const DependenceFamily& f) {
  switch (f.tag) {
    case FamilyTag::logistic:
      return {transform::to_working_box(f.alpha, 0.0, 1.0)};
    case FamilyTag::neg_logistic:
    case FamilyTag::husler_reiss:
      return {std::log(f.alpha)};
    case FamilyTag::bilogistic:
      return {transform::to_working_box(f.alpha, 0.0, 1.0),
              transform::to_working_box(f.beta, 0.0, 1.0)};
    default:
      return {std::log(f.alpha), std::log(f.beta)};
  }
}

inline DependenceFamily pp_from_working(FamilyTag tag,
                                        const std::vector<double>& t) {
  DependenceFamily f;
  f.tag = tag;
  switch (tag) {
    case FamilyTag::logistic:
      f.alpha = transform::from_working_box(t[0], 0.0, 1.0);
      break;
    case FamilyTag::neg_logistic:
    case FamilyTag::husler_reiss:
      f.alpha = std::exp(t[0]);
      break;
    case FamilyTag::bilogistic:
      f.alpha = transform::from_working_box(t[0], 0.0, 1.0);
      f.beta = transform::from_working_box(t[1], 0.0, 1.0);
      break;
    default:
      f.alpha = std::exp(t[0]);
      f.beta = std::exp(t[1]);
      break;
  }
  return f;
}

inline DependenceFamily pp_start(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::logistic: return {tag, 0.7, 0.0};
    case FamilyTag::neg_logistic: return {tag, 0.8, 0.0};
    case FamilyTag::husler_reiss: return {tag, 1.0, 0.0};
    case FamilyTag::bilogistic: return {tag, 0.7, 0.7};
    case FamilyTag::neg_bilogistic: return {tag, 1.2, 1.2};
    case FamilyTag::coles_tawn: return {tag, 0.9, 0.9};
  }
  return {tag, 0.5, 0.5};
}

}  // namespace detail

// Fit one family to a unit-Frechet point set above the radial threshold
// whose boundary line crosses each axis at the marginal quantile_level
// quantile (v = -1/log q on the Frechet scale, r0 = v/n after 1/n scaling).
inline PpFit fit_pp(std::span<const std::pair<double, double>> pair_points,
                    FamilyTag tag, double quantile_level,
                    const PpConfig& cfg = {}) {
  if (!(quantile_level > 0.0 && quantile_level < 1.0))
    throw Error("fit_pp: quantile_level outside (0,1)");
  const double n = static_cast<double>(pair_points.size());
  const double v = -1.0 / std::log(quantile_level);
  const double r0 = v / n;

  PpFit fit;
  fit.r0 = r0;
  for (const auto& [x, y] : pair_points) {
    auto [r, w] = pseudo_polar(x / n, y / n);
    // extreme coordinate ratios round w onto an endpoint; keep the angle
    // strictly interior so the angular likelihood stays evaluable
    w = std::clamp(w, 1e-15, 1.0 - 1e-15);
    if (r > r0) fit.points.emplace_back(r, w);
  }
  fit.n_points = fit.points.size();
  if (fit.n_points < cfg.min_points) throw Error("fit_pp: too few points");

  auto obj = [&](const std::vector<double>& t) {
    DependenceFamily f = detail::pp_from_working(tag, t);
    double nll = 0.0;
    for (const auto& [r, w] : fit.points) nll -= log_spectral_density_h(f, w);
    return nll;
  };
  MinimizeResult best = minimize_restarts(
      obj, detail::pp_to_working(detail::pp_start(tag)), cfg.restarts, 0.5);
  if (!best.converged) throw Error("fit_pp: optimizer non-convergence");

  fit.family = detail::pp_from_working(tag, best.x);
  fit.loglik_theta = -best.fmin;
  double theta_free = -2.0 / r0;
  for (const auto& [r, w] : fit.points)
    theta_free += std::log(2.0) - 2.0 * std::log(r);
  fit.loglik = fit.loglik_theta + theta_free;
  int k = fit.family.param_count();
  fit.aic = 2.0 * k - 2.0 * fit.loglik;

  // Boundary detection (e.g. logistic alpha -> 1 on independent data).
  if (tag == FamilyTag::logistic && fit.family.alpha > 0.995)
    fit.boundary = true;
  if ((tag == FamilyTag::neg_logistic || tag == FamilyTag::husler_reiss ||
       tag == FamilyTag::coles_tawn) &&
      fit.family.alpha < 1e-3)
    fit.boundary = true;

  auto cov = invert_matrix(
      numerical_hessian(obj, best.x, cfg.hessian_step));
  fit.se.assign(k, 0.0);
  if (!cov.empty()) {
    // delta method for the working-scale transforms
    std::vector<double> jac(k, 1.0);
    switch (tag) {
      case FamilyTag::logistic:
        jac[0] = fit.family.alpha * (1.0 - fit.family.alpha);
        break;
      case FamilyTag::neg_logistic:
      case FamilyTag::husler_reiss:
        jac[0] = fit.family.alpha;
        break;
      case FamilyTag::bilogistic:
        jac[0] = fit.family.alpha * (1.0 - fit.family.alpha);
        jac[1] = fit.family.beta * (1.0 - fit.family.beta);
        break;
      default:
        jac[0] = fit.family.alpha;
        jac[1] = fit.family.beta;
        break;
    }
    for (int i = 0; i < k; ++i)
      if (cov[i][i] > 0.0) fit.se[i] = jac[i] * std::sqrt(cov[i][i]);
  }
  return fit;
}

// All six families, sorted ascending by AIC (ties: fewer parameters, then
// enum order). Families that fail to fit are skipped.
struct FamilySelection {
  std::vector<PpFit> ranked;
  std::vector<std::string> failures;
};

inline FamilySelection select_family(
    std::span<const std::pair<double, double>> pair_points,
    double quantile_level, const PpConfig& cfg = {}) {
  FamilySelection sel;
  for (FamilyTag tag : all_families) {
    try {
      sel.ranked.push_back(fit_pp(pair_points, tag, quantile_level, cfg));
    } catch (const std::exception& e) {
      sel.failures.push_back(std::string(family_name(tag)) + ": " + e.what());
    }
  }
  if (sel.ranked.empty()) throw Error("select_family: all fits failed");
  std::stable_sort(sel.ranked.begin(), sel.ranked.end(),
                   [](const PpFit& a, const PpFit& b) {
                     if (a.aic != b.aic) return a.aic < b.aic;
                     int ka = a.family.param_count(), kb = b.family.param_count();
                     if (ka != kb) return ka < kb;
                     return static_cast<int>(a.family.tag) <
                            static_cast<int>(b.family.tag);
                   });
  return sel;
}

// Dependence-strength label from the chi summary, with band edges
// calibrated on the Husler-Reiss scale (alpha 1.0 / 1.32 / 1.6).
struct StrengthBands {
  double weak = 0.31731050786291415;        // chi at HR alpha = 1.0
  double fairly_strong = 0.44861847524440625;  // chi at HR alpha = 1.32
  double strong = 0.53211356735862306;      // chi at HR alpha = 1.6
};

inline std::string classify_pp_strength(const PpFit& fit,
                                        const StrengthBands& bands = {}) {
  double chi = dependence_chi(fit.family);
  if (chi <= 1e-12) return "independent";
  if (chi < bands.weak) return "weak-to-independent";
  if (chi < bands.fairly_strong) return "weak";
  if (chi < bands.strong) return "fairly strong";
  return "strong";
}

struct ComparisonRow {
  std::string pair_label;
  std::string cmev_label;
  std::string pp_label;
  bool agree = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::size_t n_agree_weak = 0;    // panel A
  std::size_t n_agree_strong = 0;  // panel B
  std::size_t n_disagree = 0;      // panel C
};

namespace detail {
// Reduce a model-specific label to {weak, fairly strong, strong} for the
// cross-model comparison.
inline std::string normalize_strength(std::string s) {
  for (auto& c : s) c = std::tolower(static_cast<unsigned char>(c));
  if (s.find("fairly") != std::string::npos) return "fairly strong";
  if (s.find("strong") != std::string::npos) return "strong";
  return "weak";
}
}  // namespace detail

inline ComparisonTable compare_models(
    const std::vector<std::pair<std::string, std::string>>& cmev_labels,
    const std::vector<std::pair<std::string, std::string>>& pp_labels) {
  if (cmev_labels.empty()) throw Error("compare_models: empty input");
  if (cmev_labels.size() != pp_labels.size())
    throw Error("compare_models: pair-set mismatch");
  ComparisonTable table;
  for (std::size_t i = 0; i < cmev_labels.size(); ++i) {
    if (cmev_labels[i].first != pp_labels[i].first)
      throw Error("compare_models: pair-set mismatch");
    ComparisonRow row;
    row.pair_label = cmev_labels[i].first;
    row.cmev_label = cmev_labels[i].second;
    row.pp_label = pp_labels[i].second;
    std::string a = detail::normalize_strength(row.cmev_label);
    std::string b = detail::normalize_strength(row.pp_label);
    row.agree = a == b;
    if (!row.agree)
      ++table.n_disagree;
    else if (a == "weak")
      ++table.n_agree_weak;
    else
      ++table.n_agree_strong;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace evtail
