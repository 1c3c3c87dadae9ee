#pragma once

// Batch pipeline: config parsing, the eight analysis stages (ingest through
// report), fixed 4-decimal table rendering, and a deterministic run
// manifest. Per-market and per-pair fits fan out to a bounded worker pool
// sized by the EVTAIL_WORKERS environment variable.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "evtail/bvpp.hpp"
#include "evtail/cmev.hpp"
#include "evtail/gpd.hpp"
#include "evtail/margins.hpp"
#include "evtail/market_data.hpp"
#include "evtail/simulate.hpp"
#include "evtail/threshold_mix.hpp"

namespace evtail {

class ValidationError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

struct PipelineConfig {
  // [input]
  std::string input_kind = "demo";  // demo | prices | returns
  std::string input_path;
  char delimiter = ',';
  double return_scale = 1.0;
  // [thresholds]
  std::vector<double> marginal_grid = {0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  double marginal_default = 0.70;
  std::map<std::string, double> marginal_override;  // per-market level
  double dep_quantile = 0.70;
  double pred_quantile = 0.90;
  // [predict]
  std::size_t n_importance = 100000;
  double target_quantile = -1.0;  // < 0: use dep_quantile
  // [pp]
  double pp_quantile = 0.70;
  // [simulate]
  std::string sim_generator = "demo";
  std::size_t sim_n = kDemoRows;
  // [run]
  std::uint64_t seed = 20260815;
  std::string out_dir = "out";
};

inline void validate_config(const PipelineConfig& c) {
  auto in01 = [](double q) { return q > 0.0 && q < 1.0; };
  if (!in01(c.marginal_default) || !in01(c.dep_quantile) ||
      !in01(c.pred_quantile) || !in01(c.pp_quantile))
    throw ValidationError("config: quantiles must lie in (0,1)");
  for (double q : c.marginal_grid)
    if (!in01(q)) throw ValidationError("config: quantiles must lie in (0,1)");
  for (const auto& [id, q] : c.marginal_override)
    if (!in01(q)) throw ValidationError("config: quantiles must lie in (0,1)");
  if (c.pred_quantile < c.dep_quantile)
    throw ValidationError("config: prediction quantile below dependence quantile");
  if (c.target_quantile >= 0.0 && !in01(c.target_quantile))
    throw ValidationError("config: quantiles must lie in (0,1)");
  if (c.n_importance == 0)
    throw ValidationError("config: n_importance must be positive");
  if (c.input_kind != "demo" && c.input_kind != "prices" &&
      c.input_kind != "returns")
    throw ValidationError("config: input kind must be demo, prices or returns");
  if (c.input_kind != "demo" && c.input_path.empty())
    throw ValidationError("config: input path required for kind " + c.input_kind);
}

inline std::string dump_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "[input]\n";
  os << "kind = " << c.input_kind << "\n";
  os << "path = " << c.input_path << "\n";
  os << "delimiter = " << c.delimiter << "\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  os << "return_scale = " << num(c.return_scale) << "\n\n";
  os << "[thresholds]\n";
  os << "marginal_grid = ";
  for (std::size_t i = 0; i < c.marginal_grid.size(); ++i)
    os << (i ? "," : "") << num(c.marginal_grid[i]);
  os << "\n";
  os << "marginal_default = " << num(c.marginal_default) << "\n";
  for (const auto& [id, q] : c.marginal_override)
    os << "marginal." << id << " = " << num(q) << "\n";
  os << "dep_quantile = " << num(c.dep_quantile) << "\n";
  os << "pred_quantile = " << num(c.pred_quantile) << "\n\n";
  os << "[predict]\n";
  os << "n_importance = " << c.n_importance << "\n";
  if (c.target_quantile >= 0.0)
    os << "target_quantile = " << num(c.target_quantile) << "\n";
  os << "\n[pp]\n";
  os << "quantile_level = " << num(c.pp_quantile) << "\n\n";
  os << "[simulate]\n";
  os << "generator = " << c.sim_generator << "\n";
  os << "n = " << c.sim_n << "\n\n";
  os << "[run]\n";
  os << "seed = " << c.seed << "\n";
  os << "out = " << c.out_dir << "\n";
  return os.str();
}

inline PipelineConfig parse_config(std::istream& in) {
  PipelineConfig c;
  std::string line, section;
  while (std::getline(in, line)) {
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = s.substr(1, s.size() - 2);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: malformed line: " + s);
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    auto as_double = [&](const std::string& v) {
      try {
        return std::stod(v);
      } catch (...) {
        throw ValidationError("config: bad number for " + key);
      }
    };
    if (section == "input") {
      if (key == "kind") c.input_kind = val;
      else if (key == "path") c.input_path = val;
      else if (key == "delimiter") c.delimiter = val.empty() ? ',' : val[0];
      else if (key == "return_scale") c.return_scale = as_double(val);
      else throw ValidationError("config: unknown key " + key);
    } else if (section == "thresholds") {
      if (key == "marginal_grid") {
        c.marginal_grid.clear();
        std::istringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ','))
          c.marginal_grid.push_back(as_double(detail::trim(tok)));
      } else if (key == "marginal_default") {
        c.marginal_default = as_double(val);
      } else if (key.rfind("marginal.", 0) == 0) {
        c.marginal_override[key.substr(9)] = as_double(val);
      } else if (key == "dep_quantile") {
        c.dep_quantile = as_double(val);
      } else if (key == "pred_quantile") {
        c.pred_quantile = as_double(val);
      } else {
        throw ValidationError("config: unknown key " + key);
      }
    } else if (section == "predict") {
      if (key == "n_importance")
        c.n_importance = static_cast<std::size_t>(as_double(val));
      else if (key == "target_quantile") c.target_quantile = as_double(val);
      else throw ValidationError("config: unknown key " + key);
    } else if (section == "pp") {
      if (key == "quantile_level") c.pp_quantile = as_double(val);
      else throw ValidationError("config: unknown key " + key);
    } else if (section == "simulate") {
      if (key == "generator") c.sim_generator = val;
      else if (key == "n") c.sim_n = static_cast<std::size_t>(as_double(val));
      else throw ValidationError("config: unknown key " + key);
    } else if (section == "run") {
      if (key == "seed") c.seed = std::stoull(val);
      else if (key == "out") c.out_dir = val;
      else throw ValidationError("config: unknown key " + key);
    } else {
      throw ValidationError("config: unknown section " + section);
    }
  }
  validate_config(c);
  return c;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// --- worker pool ---------------------------------------------------------

inline std::size_t worker_count() {
  if (const char* env = std::getenv("EVTAIL_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return std::min<long>(v, 64);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return std::min<std::size_t>(hw ? hw : 1, 8);
}

// Static block partition; f(i) must only touch slot i of its output.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// --- rendering helpers ---------------------------------------------------

inline std::string fmt4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}
inline std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string fmt_est_se(double est, double se) {
  return fmt4(est) + " (" + fmt4(se) + ")";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot open output file " + p.string());
  return f;
}

// --- stage plumbing ------------------------------------------------------

namespace detail {

inline ReturnPanel require_panel(const std::filesystem::path& p,
                                 const std::string& what,
                                 std::string* scale = nullptr) {
  std::ifstream f(p);
  if (!f) throw IoError("missing " + what + " (" + p.string() + ")");
  return read_panel(f, ',', scale);
}

inline double marginal_level(const PipelineConfig& c, const std::string& id) {
  auto it = c.marginal_override.find(id);
  return it != c.marginal_override.end() ? it->second : c.marginal_default;
}

inline std::vector<MarginTransform> fit_margins(const PipelineConfig& cfg,
                                                const ReturnPanel& panel) {
  std::vector<MarginTransform> margins(panel.n_cols());
  parallel_for(panel.n_cols(), [&](std::size_t j) {
    margins[j] =
        make_margin(panel.returns[j], marginal_level(cfg, panel.market_ids[j]));
  });
  return margins;
}

}  // namespace detail

// simulate: write the configured generator's panel to the input path (demo
// default), so later stages can ingest it.
inline void stage_simulate(const PipelineConfig& cfg) {
  std::filesystem::path out =
      cfg.input_path.empty() ? "demo_panel.csv" : cfg.input_path;
  ReturnPanel panel;
  if (cfg.sim_generator == "demo") {
    panel = demo_panel(cfg.seed, cfg.sim_n);
  } else if (cfg.sim_generator == "gauss_copula") {
    std::vector<std::vector<double>> eye(5, std::vector<double>(5, 0.0));
    for (int i = 0; i < 5; ++i) eye[i][i] = 1.0;
    panel = sim_gauss_copula_panel(eye, cfg.sim_n, cfg.seed,
                                   PanelMargin::normal);
  } else {
    throw ValidationError("simulate: unknown generator " + cfg.sim_generator);
  }
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  auto f = open_out(out);
  write_panel(f, panel);
}

// ingest: load or generate the raw data, align, compute returns, fit the
// marginal transforms, and persist the returns / Laplace / Frechet panels
// plus pairwise scatter data.
inline void stage_ingest(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out(cfg.out_dir);

  ReturnPanel returns;
  if (cfg.input_kind == "demo") {
    returns = cfg.input_path.empty()
                  ? demo_panel(cfg.seed)
                  : detail::require_panel(cfg.input_path, "demo panel");
  } else if (cfg.input_kind == "returns") {
    returns = detail::require_panel(cfg.input_path, "returns panel");
  } else {
    std::ifstream f(cfg.input_path);
    if (!f) throw IoError("missing price file (" + cfg.input_path + ")");
    std::vector<PriceSeries> prices = load_prices(f, cfg.delimiter);
    std::vector<PriceSeries> rets;
    for (const auto& s : prices) rets.push_back(log_returns(s, cfg.return_scale));
    returns = align(rets);
  }
  returns = align(returns);

  {
    auto f = open_out(out / "returns_panel.csv");
    write_panel(f, returns);
  }

  std::vector<MarginTransform> margins = detail::fit_margins(cfg, returns);
  ReturnPanel lap = returns, fre = returns;
  parallel_for(returns.n_cols(), [&](std::size_t j) {
    for (std::size_t t = 0; t < returns.n_rows(); ++t) {
      lap.returns[j][t] = to_laplace(margins[j], returns.returns[j][t]);
      fre.returns[j][t] = to_frechet(margins[j], returns.returns[j][t]);
    }
  });
  {
    auto f = open_out(out / "laplace_panel.csv");
    write_panel(f, lap, ',', "laplace");
  }
  {
    auto f = open_out(out / "frechet_panel.csv");
    write_panel(f, fre, ',', "frechet");
  }
  for (std::size_t a = 0; a < returns.n_cols(); ++a)
    for (std::size_t b = a + 1; b < returns.n_cols(); ++b) {
      auto f = open_out(out / ("scatter_" + returns.market_ids[a] + "_" +
                               returns.market_ids[b] + ".csv"));
      f << returns.market_ids[a] << "," << returns.market_ids[b] << "\n";
      char buf[64];
      for (std::size_t t = 0; t < returns.n_rows(); ++t) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g", returns.returns[a][t],
                      returns.returns[b][t]);
        f << buf << "\n";
      }
    }
}

// fit-gpd: per-market GPD fits across the marginal quantile grid, plus the
// four diagnostics at each market's selected level.
inline void stage_fit_gpd(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  ReturnPanel returns =
      detail::require_panel(out / "returns_panel.csv", "returns panel");

  struct Row {
    std::string market;
    double level;
    GpdFit fit;
    bool failed = false;
    std::string error;
  };
  std::vector<Row> rows;
  for (std::size_t j = 0; j < returns.n_cols(); ++j)
    for (double q : cfg.marginal_grid)
      rows.push_back({returns.market_ids[j], q, {}, false, ""});
  parallel_for(rows.size(), [&](std::size_t i) {
    std::size_t j = i / cfg.marginal_grid.size();
    try {
      rows[i].fit = fit_gpd(returns.returns[j], rows[i].level);
    } catch (const std::exception& e) {
      rows[i].failed = true;
      rows[i].error = e.what();
    }
  });

  auto f = open_out(out / "gpd_fits.csv");
  f << "market,quantile_level,threshold,sigma,se_sigma,xi,se_xi,n_exceed,"
       "loglik,note\n";
  for (const Row& r : rows) {
    if (r.failed) {
      f << r.market << "," << fmt4(r.level) << ",,,,,,,," << r.error << "\n";
      continue;
    }
    f << r.market << "," << fmt4(r.level) << "," << fmt4(r.fit.threshold)
      << "," << fmt4(r.fit.sigma) << "," << fmt4(r.fit.se_sigma) << ","
      << fmt4(r.fit.xi) << "," << fmt4(r.fit.se_xi) << "," << r.fit.n_exceed
      << "," << fmt2(r.fit.loglik) << ","
      << (r.fit.unreliable_mle ? "unreliable MLE regime" : "") << "\n";
  }

  for (std::size_t j = 0; j < returns.n_cols(); ++j) {
    double level = detail::marginal_level(cfg, returns.market_ids[j]);
    GpdFit fit = fit_gpd(returns.returns[j], level);
    GpdDiagnostics d = gpd_diagnostics(fit, returns.returns[j]);
    for (const PlotSeries* s : {&d.probability, &d.quantile, &d.return_level,
                                &d.density, &d.density_model}) {
      auto pf = open_out(out / (returns.market_ids[j] + "_" + s->name + ".csv"));
      pf << "x,y\n";
      char buf[64];
      for (std::size_t i = 0; i < s->x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g", s->x[i], s->y[i]);
        pf << buf << "\n";
      }
    }
  }
}

// thresholds: advisory mixture-model threshold per market.
inline void stage_thresholds(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  ReturnPanel returns =
      detail::require_panel(out / "returns_panel.csv", "returns panel");

  std::vector<MixtureFit> fits(returns.n_cols());
  std::vector<std::string> errors(returns.n_cols());
  parallel_for(returns.n_cols(), [&](std::size_t j) {
    try {
      fits[j] = fit_mixture(returns.returns[j], TailMode::bulk_based);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  });

  auto f = open_out(out / "mixture_thresholds.csv");
  f << "market,gamma,u,suggested_level,se_level,sigma,xi,phi_u,loglik,note\n";
  for (std::size_t j = 0; j < returns.n_cols(); ++j) {
    if (!errors[j].empty()) {
      f << returns.market_ids[j] << ",,,,,,,,," << errors[j] << "\n";
      continue;
    }
    const MixtureFit& m = fits[j];
    double level = empirical_cdf_interp(m.sorted, m.u);
    double se_level = kde_density(m.sorted, m.gamma, m.u) * m.se_u;
    f << returns.market_ids[j] << "," << fmt4(m.gamma) << "," << fmt4(m.u)
      << "," << fmt4(level) << "," << fmt4(se_level) << "," << fmt4(m.sigma_u)
      << "," << fmt4(m.xi) << "," << fmt4(m.phi_u) << "," << fmt2(m.loglik)
      << "," << (m.u_outside_band ? "threshold at band edge" : "") << "\n";
    auto pf = open_out(out / (returns.market_ids[j] + "_mixture_profile.csv"));
    pf << "quantile_level,loglik\n";
    char buf[64];
    for (std::size_t i = 0; i < m.profile_q.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g", m.profile_q[i],
                    m.profile_ll[i]);
      pf << buf << "\n";
    }
  }
}

// fit-cmev: one conditional-extremes fit per conditioning market.
inline void stage_fit_cmev(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  std::string scale;
  ReturnPanel lap =
      detail::require_panel(out / "laplace_panel.csv", "Laplace panel", &scale);
  if (scale != "laplace") throw IoError("missing Laplace panel (bad scale tag)");

  std::vector<HtFit> fits(lap.n_cols());
  parallel_for(lap.n_cols(), [&](std::size_t j) {
    fits[j] = fit_ht(lap, lap.market_ids[j], cfg.dep_quantile);
  });

  // wide table: one conditioning row, a then b per target
  auto f = open_out(out / "cmev_table.csv");
  f << "conditioning,param";
  for (const auto& id : lap.market_ids) f << "," << id;
  f << "\n";
  for (std::size_t j = 0; j < lap.n_cols(); ++j) {
    for (const char* which : {"a", "b"}) {
      f << lap.market_ids[j] << "," << which;
      std::size_t k = 0;
      for (std::size_t t = 0; t < lap.n_cols(); ++t) {
        if (t == j) {
          f << ",-";
          continue;
        }
        const HtTarget& tg = fits[j].targets[k++];
        f << "," << fmt4(which[0] == 'a' ? tg.a : tg.b);
      }
      f << "\n";
    }
  }

  // long form with labels, consumed by the compare stage
  auto g = open_out(out / "cmev_params.csv");
  g << "conditioning,target,a,b,mu,sigma,n_exceed,boundary,label\n";
  for (const HtFit& fit : fits)
    for (const HtTarget& t : fit.targets)
      g << fit.conditioning_index << "," << t.market_id << "," << fmt4(t.a)
        << "," << fmt4(t.b) << "," << fmt4(t.mu) << "," << fmt4(t.sigma) << ","
        << fit.n_cond_exceed << "," << (t.boundary ? "yes" : "no") << ","
        << classify_dependence(t.a) << "\n";

  // residual diagnostics
  ReturnPanel panel = lap;
  for (const HtFit& fit : fits) {
    std::vector<HtTargetDiagnostics> ds = ht_diagnostics(fit, panel);
    for (const HtTargetDiagnostics& d : ds) {
      auto pf = open_out(out / ("cmev_diag_" + fit.conditioning_index + "_" +
                                d.market_id + ".csv"));
      pf << "series,x,y\n";
      char buf[96];
      for (const PlotSeries* s :
           {&d.residual_trend, &d.residual_trend_smooth, &d.scale_trend,
            &d.scale_trend_smooth, &d.scatter, &d.q05, &d.q50, &d.q95}) {
        for (std::size_t i = 0; i < s->x.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g", s->name.c_str(),
                        s->x[i], s->y[i]);
          pf << buf << "\n";
        }
      }
    }
  }
}

// predict: 5 x 4 conditional exceedance probability table.
inline void stage_predict(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  std::string scale;
  ReturnPanel lap =
      detail::require_panel(out / "laplace_panel.csv", "Laplace panel", &scale);
  if (scale != "laplace") throw IoError("missing Laplace panel (bad scale tag)");

  std::vector<PredictionResult> results(lap.n_cols());
  parallel_for(lap.n_cols(), [&](std::size_t j) {
    HtFit fit = fit_ht(lap, lap.market_ids[j], cfg.dep_quantile);
    results[j] = predict_exceedance_prob(fit, cfg.pred_quantile,
                                         cfg.n_importance, cfg.seed + j,
                                         cfg.target_quantile);
  });

  auto f = open_out(out / "prediction_table.csv");
  f << "conditioning";
  for (const auto& id : lap.market_ids) f << "," << id;
  f << "\n";
  for (std::size_t j = 0; j < lap.n_cols(); ++j) {
    f << lap.market_ids[j];
    std::size_t k = 0;
    for (std::size_t t = 0; t < lap.n_cols(); ++t) {
      if (t == j) {
        f << ",-";
        continue;
      }
      f << "," << fmt4(results[j].probabilities[k++]);
    }
    f << "\n";
  }
}

// fit-pp: all six families for every market pair, with AIC selection.
inline void stage_fit_pp(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  std::string scale;
  ReturnPanel fre = detail::require_panel(out / "frechet_panel.csv",
                                          "Frechet panel", &scale);
  if (scale != "frechet") throw IoError("missing Frechet panel (bad scale tag)");

  struct Pair {
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < fre.n_cols(); ++a)
    for (std::size_t b = a + 1; b < fre.n_cols(); ++b) pairs.push_back({a, b});

  std::vector<FamilySelection> sels(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    std::vector<std::pair<double, double>> pts(fre.n_rows());
    for (std::size_t t = 0; t < fre.n_rows(); ++t)
      pts[t] = {fre.returns[pairs[i].a][t], fre.returns[pairs[i].b][t]};
    sels[i] = select_family(pts, cfg.pp_quantile);
  });

  auto f = open_out(out / "pp_table.csv");
  f << "pair,family,alpha,beta,aic\n";
  auto g = open_out(out / "pp_selection.csv");
  g << "pair,family,alpha,beta,chi,label,aic,n_points\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::string label =
        fre.market_ids[pairs[i].a] + "-" + fre.market_ids[pairs[i].b];
    // table rows in fixed family order, ranking recorded separately
    for (FamilyTag tag : all_families) {
      const PpFit* fit = nullptr;
      for (const PpFit& cand : sels[i].ranked)
        if (cand.family.tag == tag) fit = &cand;
      if (!fit) continue;
      f << label << "," << family_name(tag) << ","
        << fmt_est_se(fit->family.alpha, fit->se[0]) << ",";
      if (fit->family.param_count() == 2)
        f << fmt_est_se(fit->family.beta, fit->se[1]);
      else
        f << "Nil";
      f << "," << fmt2(fit->aic) << "\n";
    }
    const PpFit& best = sels[i].ranked.front();
    g << label << "," << family_name(best.family.tag) << ","
      << fmt4(best.family.alpha) << ","
      << (best.family.param_count() == 2 ? fmt4(best.family.beta) : "Nil")
      << "," << fmt4(dependence_chi(best.family)) << ","
      << classify_pp_strength(best) << "," << fmt2(best.aic) << ","
      << best.n_points << "\n";
  }
}

// compare: CMEV vs point-process dependence labels per unordered pair.
inline void stage_compare(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  std::ifstream cf(out / "cmev_params.csv");
  if (!cf) throw IoError("missing CMEV parameter table");
  std::ifstream pf(out / "pp_selection.csv");
  if (!pf) throw IoError("missing point-process selection table");

  // directed a values keyed by (conditioning, target)
  std::map<std::pair<std::string, std::string>, double> a_by_dir;
  std::string line;
  std::getline(cf, line);
  while (std::getline(cf, line)) {
    auto fields = detail::split_line(line, ',');
    if (fields.size() < 4) continue;
    a_by_dir[{fields[0], fields[1]}] = std::stod(fields[2]);
  }

  std::vector<std::pair<std::string, std::string>> cmev_labels, pp_labels;
  std::getline(pf, line);
  while (std::getline(pf, line)) {
    auto fields = detail::split_line(line, ',');
    if (fields.size() < 6) continue;
    const std::string& pair = fields[0];
    auto dash = pair.find('-');
    std::string ma = pair.substr(0, dash), mb = pair.substr(dash + 1);
    auto it1 = a_by_dir.find({ma, mb});
    auto it2 = a_by_dir.find({mb, ma});
    if (it1 == a_by_dir.end() || it2 == a_by_dir.end())
      throw IoError("CMEV and point-process tables cover different pairs");
    double a_mean = 0.5 * (it1->second + it2->second);
    cmev_labels.emplace_back(pair, classify_dependence(a_mean));
    pp_labels.emplace_back(pair, fields[5]);
  }

  ComparisonTable table = compare_models(cmev_labels, pp_labels);
  auto f = open_out(out / "comparison.csv");
  f << "pair,cmev_label,pp_label,agree,panel\n";
  for (const ComparisonRow& r : table.rows) {
    std::string panel =
        !r.agree ? "C"
                 : (detail::normalize_strength(r.cmev_label) == "weak" ? "A"
                                                                       : "B");
    f << r.pair_label << "," << r.cmev_label << "," << r.pp_label << ","
      << (r.agree ? "yes" : "no") << "," << panel << "\n";
  }
  f << "# panel A (agree, weak): " << table.n_agree_weak << "\n";
  f << "# panel B (agree, stronger): " << table.n_agree_strong << "\n";
  f << "# panel C (disagree): " << table.n_disagree << "\n";
}

// report: aggregate the persisted stage tables into one document and write
// the run manifest.
inline void stage_report(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  auto f = open_out(out / "report.txt");
  auto emit = [&](const std::string& title, const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("missing stage output " + p.string());
    f << "== " << title << " ==\n" << in.rdbuf() << "\n";
  };
  emit("GPD marginal fits", out / "gpd_fits.csv");
  emit("Mixture-model advisory thresholds", out / "mixture_thresholds.csv");
  emit("CMEV dependence parameters", out / "cmev_table.csv");
  emit("Predicted conditional exceedance probabilities",
       out / "prediction_table.csv");
  emit("Point-process dependence fits", out / "pp_table.csv");
  emit("Point-process family selection", out / "pp_selection.csv");
  emit("CMEV vs point-process comparison", out / "comparison.csv");

  auto m = open_out(out / "manifest.txt");
  m << "seed = " << cfg.seed << "\n";
  // The hash identifies the analysis settings; where the outputs land must
  // not change it, or reruns into a fresh directory would never match.
  PipelineConfig hashed = cfg;
  hashed.out_dir.clear();
  m << "config_hash = " << std::hex << fnv1a(dump_config(hashed)) << std::dec
    << "\n";
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.txt")
      files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  for (const auto& name : files) m << "file = " << name << "\n";
}

// Full pipeline; any stage failure surfaces with its stage name attached
// (partial outputs stay on disk).
inline void run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  struct Stage {
    const char* name;
    void (*fn)(const PipelineConfig&);
  };
  const Stage stages[] = {
      {"ingest", stage_ingest},       {"fit-gpd", stage_fit_gpd},
      {"thresholds", stage_thresholds}, {"fit-cmev", stage_fit_cmev},
      {"predict", stage_predict},     {"fit-pp", stage_fit_pp},
      {"compare", stage_compare},     {"report", stage_report},
  };
  for (const Stage& s : stages) {
    try {
      s.fn(cfg);
    } catch (const ValidationError& e) {
      throw ValidationError("stage " + std::string(s.name) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError("stage " + std::string(s.name) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("stage " + std::string(s.name) + ": " + e.what());
    }
  }
}

}  // namespace evtail
