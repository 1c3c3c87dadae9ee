#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evtail/pipeline.hpp"

using namespace evtail;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("evtail_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config dump/parse round trip") {
  PipelineConfig c;
  c.input_kind = "returns";
  c.input_path = "panel.csv";
  c.marginal_default = 0.8;
  c.marginal_grid = {0.7, 0.8};
  c.dep_quantile = 0.75;
  c.pred_quantile = 0.92;
  c.n_importance = 5000;
  c.pp_quantile = 0.72;
  c.seed = 99;
  c.out_dir = "results";
  std::string dumped = dump_config(c);
  std::istringstream in(dumped);
  PipelineConfig back = parse_config(in);
  CHECK(dump_config(back) == dumped);
  CHECK(back.seed == 99);
  CHECK(back.dep_quantile == Catch::Approx(0.75));
  CHECK(back.marginal_grid.size() == 2);
}

TEST_CASE("config parsing: overrides, comments, validation") {
  std::istringstream in(
      "# comment\n"
      "[thresholds]\n"
      "marginal_default = 0.75\n"
      "marginal.ALPHA = 0.85\n"
      "; another comment\n"
      "[run]\n"
      "seed = 7\n");
  PipelineConfig c = parse_config(in);
  CHECK(detail::marginal_level(c, "ALPHA") == Catch::Approx(0.85));
  CHECK(detail::marginal_level(c, "BETA") == Catch::Approx(0.75));
  CHECK(c.seed == 7);

  std::istringstream bad1("[thresholds]\nnope = 1\n");
  CHECK_THROWS_AS(parse_config(bad1), ValidationError);
  std::istringstream bad2("[thresholds]\ndep_quantile = high\n");
  CHECK_THROWS_AS(parse_config(bad2), ValidationError);
  std::istringstream bad3("[mystery]\nx = 1\n");
  CHECK_THROWS_AS(parse_config(bad3), ValidationError);
  std::istringstream bad4("[thresholds]\ndep_quantile = 1.5\n");
  CHECK_THROWS_AS(parse_config(bad4), ValidationError);
  std::istringstream bad5("[predict]\nn_importance = 0\n");
  CHECK_THROWS_AS(parse_config(bad5), ValidationError);
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a("a") == 0xAF63DC4C8601EC8CULL);
  CHECK(fnv1a("foobar") == 0x85944171F73967E8ULL);
}

TEST_CASE("formatting helpers") {
  CHECK(fmt4(1.34126) == "1.3413");
  CHECK(fmt4(-0.00004) == "-0.0000");
  CHECK(fmt2(3.14159) == "3.14");
  CHECK(fmt_est_se(1.34126, 0.03454) == "1.3413 (0.0345)");
}

TEST_CASE("worker pool") {
  setenv("EVTAIL_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("EVTAIL_WORKERS", "1000", 1);
  CHECK(worker_count() == 64);  // clamped
  unsetenv("EVTAIL_WORKERS");
  CHECK(worker_count() >= 1);

  std::vector<int> hits(257, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);

  CHECK_THROWS_WITH(
      parallel_for(64, [&](std::size_t i) {
        if (i == 13) throw Error("boom in worker");
      }),
      Catch::Matchers::ContainsSubstring("boom in worker"));
}

TEST_CASE("stages demand their upstream artifacts") {
  auto dir = fresh_dir("stages");
  PipelineConfig cfg;
  cfg.out_dir = dir.string();
  CHECK_THROWS_AS(stage_fit_gpd(cfg), IoError);
  CHECK_THROWS_AS(stage_fit_cmev(cfg), IoError);
  CHECK_THROWS_AS(stage_fit_pp(cfg), IoError);
  CHECK_THROWS_WITH(stage_fit_pp(cfg),
                    Catch::Matchers::ContainsSubstring("missing"));

  // a panel with the wrong scale tag is rejected, not silently used
  {
    ReturnPanel p;
    p.market_ids = {"A"};
    p.dates = {"2020-01-01"};
    p.returns = {{0.5}};
    auto f = open_out(dir / "frechet_panel.csv");
    write_panel(f, p, ',', "laplace");
  }
  CHECK_THROWS_WITH(stage_fit_pp(cfg),
                    Catch::Matchers::ContainsSubstring("scale tag"));
}

TEST_CASE("simulate stage writes a readable panel") {
  auto dir = fresh_dir("simulate");
  PipelineConfig cfg;
  cfg.out_dir = dir.string();
  cfg.input_path = (dir / "panel.csv").string();
  cfg.sim_generator = "demo";
  cfg.sim_n = 400;
  cfg.seed = 123;
  stage_simulate(cfg);

  std::ifstream f(dir / "panel.csv");
  REQUIRE(f.good());
  ReturnPanel p = read_panel(f);
  CHECK(p.n_rows() == 400);
  CHECK(p.market_ids.size() == 5);

  cfg.sim_generator = "martian";
  CHECK_THROWS_AS(stage_simulate(cfg), ValidationError);
}

TEST_CASE("validation errors carry exit-code-relevant types") {
  PipelineConfig c;
  c.dep_quantile = 0.0;
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c = PipelineConfig{};
  c.pred_quantile = 0.5;  // below dep_quantile
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c = PipelineConfig{};
  c.input_kind = "parquet";
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  // ValidationError and IoError are distinguishable from the base Error
  CHECK_THROWS_AS(
      []() { throw ValidationError("x"); }(), ValidationError);
  CHECK_THROWS_AS([]() { throw IoError("x"); }(), IoError);
}
