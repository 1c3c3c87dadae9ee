#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evtail/gpd.hpp"
#include "evtail/simulate.hpp"

using namespace evtail;

TEST_CASE("gpd cdf/quantile/density closed forms") {
  GpdFit f;
  f.threshold = 1.0;
  f.sigma = 2.0;
  f.xi = 0.25;
  for (double p : {0.0, 0.1, 0.5, 0.9, 0.999}) {
    double x = gpd_quantile(f, p);
    CHECK(gpd_cdf(f, x) == Catch::Approx(p).margin(1e-12));
  }
  // exponential limit
  GpdFit e;
  e.sigma = 1.5;
  e.xi = 0.0;
  CHECK(gpd_cdf(e, 1.5) == Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(gpd_quantile(e, 0.5) == Catch::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(gpd_density(e, 0.0) == Catch::Approx(1.0 / 1.5).epsilon(1e-12));

  // negative shape: finite upper endpoint sigma/|xi|
  GpdFit n;
  n.sigma = 1.0;
  n.xi = -0.5;
  CHECK(gpd_cdf(n, 5.0) == 1.0);  // beyond the endpoint at 2
  CHECK(gpd_density(n, 5.0) == 0.0);

  CHECK_THROWS_AS(gpd_cdf(f, 0.5), Error);      // below threshold
  CHECK_THROWS_AS(gpd_quantile(f, 1.0), Error);
}

TEST_CASE("fit_gpd recovers simulated parameters") {
  std::vector<double> x = sim_gpd(2.0, 0.3, 20000, 7);
  GpdFit fit = fit_gpd(x, 0.5);
  // excesses above u are GPD(sigma + xi*u, xi)
  double sigma_true = 2.0 + 0.3 * fit.threshold;
  CHECK(fit.xi == Catch::Approx(0.3).margin(0.04));
  CHECK(fit.sigma == Catch::Approx(sigma_true).epsilon(0.05));
  CHECK(fit.n_exceed == 10000);
  CHECK(fit.se_xi > 0.0);
  CHECK(fit.se_sigma > 0.0);
  CHECK(fit.quantile_level == 0.5);
  CHECK_FALSE(fit.unreliable_mle);

  // coverage sanity: truth inside +-3 se
  CHECK(std::fabs(fit.xi - 0.3) < 3.0 * fit.se_xi);
}

TEST_CASE("fit_gpd flags unreliable mle and rejects bad input") {
  std::vector<double> x = sim_gpd(1.0, -0.65, 5000, 11);
  GpdFit fit = fit_gpd(x, 0.3);
  CHECK(fit.xi < -0.4);
  if (fit.xi <= -0.5) CHECK(fit.unreliable_mle);

  std::vector<double> tiny = sim_gpd(1.0, 0.1, 40, 3);
  CHECK_THROWS_WITH(fit_gpd(tiny, 0.9),
                    Catch::Matchers::ContainsSubstring("too few exceedances"));
  CHECK_THROWS_AS(fit_gpd(tiny, 1.5), Error);
}

TEST_CASE("gpd diagnostics have coherent shapes") {
  std::vector<double> x = sim_gpd(1.0, 0.2, 3000, 21);
  GpdFit fit = fit_gpd(x, 0.7);
  GpdDiagnostics d = gpd_diagnostics(fit, x);

  REQUIRE(d.probability.x.size() == fit.n_exceed);
  for (std::size_t i = 0; i < d.probability.x.size(); ++i) {
    CHECK(d.probability.y[i] >= 0.0);
    CHECK(d.probability.y[i] <= 1.0);
    if (i > 0) CHECK(d.probability.y[i] >= d.probability.y[i - 1]);
  }
  // quantile plot roughly tracks the diagonal
  for (std::size_t i = 0; i < d.quantile.x.size(); i += 50)
    CHECK(d.quantile.y[i] == Catch::Approx(d.quantile.x[i]).margin(
                                 0.2 + 0.3 * d.quantile.x[i]));
  // return levels increase with return period
  REQUIRE(d.return_level.x.size() > 10);
  for (std::size_t i = 1; i < d.return_level.x.size(); ++i)
    CHECK(d.return_level.y[i] > d.return_level.y[i - 1]);
  // histogram density integrates to one
  double mass = 0.0;
  double width = 2.0 * d.density.x[0];
  for (double v : d.density.y) mass += v * width;
  CHECK(mass == Catch::Approx(1.0).epsilon(1e-9));
  REQUIRE(d.density_model.x.size() == 201);
}
