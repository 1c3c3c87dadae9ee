#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "evtail/market_data.hpp"

using namespace evtail;

TEST_CASE("load_prices parses a small file") {
  std::istringstream in(
      "date,ACME\n2020-01-01,100\n2020-01-02,105\n2020-01-03,103\n");
  auto series = load_prices(in);
  REQUIRE(series.size() == 1);
  CHECK(series[0].market_id == "ACME");
  REQUIRE(series[0].values.size() == 3);
  CHECK(series[0].values[1] == Catch::Approx(105.0));
}

TEST_CASE("load_prices rejects bad rows and bad files") {
  std::istringstream zero("date,A\n2020-01-01,0\n");
  CHECK_THROWS_WITH(load_prices(zero), Catch::Matchers::ContainsSubstring(
                                           "non-positive price"));

  std::istringstream badhdr("justone\n");
  CHECK_THROWS_AS(load_prices(badhdr), Error);

  std::istringstream nonmono("date,A\n2020-01-02,1\n2020-01-01,2\n");
  CHECK_THROWS_AS(load_prices(nonmono), Error);

  // unparsable dates are skipped, not fatal
  std::istringstream skip("date,A\nnot-a-date,5\n2020-01-01,1\n2020-01-02,2\n");
  auto s = load_prices(skip);
  CHECK(s[0].values.size() == 2);
}

TEST_CASE("log returns") {
  PriceSeries s{"A", {"2020-01-01", "2020-01-02"}, {100.0, 105.0}};
  PriceSeries r = log_returns(s);
  REQUIRE(r.values.size() == 1);
  CHECK(r.values[0] == Catch::Approx(std::log(1.05)).epsilon(1e-12));
  CHECK(r.dates[0] == "2020-01-02");

  PriceSeries c{"A", {"2020-01-01", "2020-01-02", "2020-01-03"},
                {50.0, 50.0, 50.0}};
  for (double v : log_returns(c).values) CHECK(v == 0.0);

  PriceSeries one{"A", {"2020-01-01"}, {1.0}};
  CHECK_THROWS_AS(log_returns(one), Error);
}

TEST_CASE("round trip: prices from cumulative log returns") {
  PriceSeries s{"A",
                {"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04"},
                {100.0, 104.2, 99.1, 101.7}};
  PriceSeries r = log_returns(s);
  double acc = s.values[0];
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    acc *= std::exp(r.values[i]);
    CHECK(acc == Catch::Approx(s.values[i + 1]).epsilon(1e-12));
  }
}

TEST_CASE("align inner-joins on dates") {
  PriceSeries a{"A", {"d1", "d2", "d3", "d4", "d5"}, {1, 2, 3, 4, 5}};
  PriceSeries b{"B", {"d2", "d3", "d4", "d5"}, {9, 8, 7, 6}};
  // align works on any date-keyed series; ISO validity matters only at load
  ReturnPanel p = align(std::vector<PriceSeries>{a, b});
  REQUIRE(p.n_rows() == 4);
  CHECK(p.market_ids == std::vector<std::string>{"A", "B"});
  CHECK(p.returns[0][0] == Catch::Approx(2.0));
  CHECK(p.returns[1][3] == Catch::Approx(6.0));

  PriceSeries c{"C", {"x1"}, {1}};
  CHECK_THROWS_WITH(align(std::vector<PriceSeries>{a, c}),
                    Catch::Matchers::ContainsSubstring("empty intersection"));
}

TEST_CASE("align is idempotent") {
  PriceSeries a{"A", {"d1", "d2", "d3"}, {1, 2, 3}};
  PriceSeries b{"B", {"d1", "d2", "d3"}, {4, 5, 6}};
  ReturnPanel p = align(std::vector<PriceSeries>{a, b});
  ReturnPanel q = align(p);
  CHECK(q.dates == p.dates);
  CHECK(q.returns == p.returns);
}

TEST_CASE("panel write/read round trip with scale tag") {
  ReturnPanel p;
  p.market_ids = {"A", "B"};
  p.dates = {"2020-01-01", "2020-01-02"};
  p.returns = {{0.012345678901, -0.5}, {1.5, 2.25}};
  std::ostringstream out;
  write_panel(out, p, ',', "laplace");

  std::istringstream in(out.str());
  std::string tag;
  ReturnPanel q = read_panel(in, ',', &tag);
  CHECK(tag == "laplace");
  CHECK(q.market_ids == p.market_ids);
  CHECK(q.dates == p.dates);
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 2; ++t)
      CHECK(q.returns[j][t] == Catch::Approx(p.returns[j][t]).epsilon(1e-11));

  // no tag present
  std::istringstream in2("date,A\n2020-01-01,1.5\n");
  tag = "stale";
  ReturnPanel r = read_panel(in2, ',', &tag);
  CHECK(tag.empty());
  CHECK(r.returns[0][0] == Catch::Approx(1.5));
}
