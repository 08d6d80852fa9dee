#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "atb/harness.hpp"

using namespace atb;

namespace {

nlohmann::json quadratic_spec(double x_star, const std::string& noise) {
  return {{"family", "power"},   {"p", 1},
          {"alphas", {2.0}},     {"coeffs", {1.0}},
          {"x_star", {x_star}},  {"noise", {{"kind", noise}}}};
}

}  // namespace

TEST_CASE("slope fits recover exact power laws") {
  std::vector<double> horizons{1024, 2048, 4096, 8192, 16384};
  std::vector<double> sqrt_vals, lin_vals, tt_vals;
  for (double h : horizons) {
    sqrt_vals.push_back(3.7 * std::sqrt(h));
    lin_vals.push_back(0.2 * h);
    tt_vals.push_back(1.4 * std::pow(h, 2.0 / 3.0));
  }
  CHECK(std::fabs(fit_slope(horizons, sqrt_vals).slope - 0.5) < 1e-9);
  CHECK(std::fabs(fit_slope(horizons, lin_vals).slope - 1.0) < 1e-9);
  CHECK(std::fabs(fit_slope(horizons, tt_vals).slope - 2.0 / 3.0) < 1e-9);
  CHECK(fit_slope(horizons, sqrt_vals).residual_rms < 1e-12);
}

TEST_CASE("slope fits reject degenerate inputs") {
  CHECK_THROWS_AS(fit_slope({1024, 2048}, {1.0, 2.0}), ContractViolation);
  CHECK_THROWS_AS(fit_slope({1024, 2048, 4096}, {1.0, 0.0, 2.0}), ContractViolation);
  CHECK_THROWS_AS(fit_slope({1024, 2048, 4096}, {1.0, -2.0, 2.0}), ContractViolation);
}

TEST_CASE("medians and quantiles are permutation invariant and monotone") {
  std::vector<double> a{5.0, 1.0, 3.0, 2.0, 4.0};
  std::vector<double> b{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(median(a) == median(b));
  CHECK(median(a) == 3.0);
  CHECK(quantile(a, 0.25) <= median(a));
  CHECK(median(a) <= quantile(a, 0.75));
}

TEST_CASE("config validation enforces the documented invariants") {
  nlohmann::json base{{"environment", quadratic_spec(0.5, "bernoulli")},
                      {"horizons", {100, 200}},
                      {"seeds", {1, 2}}};
  CHECK_NOTHROW(ExperimentConfig::from_json(base));

  nlohmann::json bad_h = base;
  bad_h["horizons"] = {200, 100};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_h), ConfigError);

  nlohmann::json dup_s = base;
  dup_s["seeds"] = {1, 1};
  CHECK_THROWS_AS(ExperimentConfig::from_json(dup_s), ConfigError);
}

TEST_CASE("a constant deterministic experiment has zero aggregate regret") {
  ExperimentConfig config;
  config.environment = {{"family", "constant"},
                        {"p", 1},
                        {"value", 0.5},
                        {"noise", {{"kind", "deterministic"}}}};
  config.strategy = StrategySpec::from_json({{"kind", "atb"}, {"epsilon", 0.5}, {"gamma", 0.5}});
  config.horizons = {64};
  config.seeds = {1};
  AggregateReport report = run_experiment(config);
  REQUIRE(report.horizons.size() == 1);
  CHECK(report.horizons[0].median_rt == 0.0);
  CHECK(report.horizons[0].median_st == 0.0);
}

TEST_CASE("experiments are deterministic and worker-count independent") {
  ExperimentConfig config;
  config.environment = quadratic_spec(0.8, "bernoulli");
  config.strategy = StrategySpec::from_json({{"kind", "atb"}, {"epsilon", 0.2}, {"gamma", 0.5}});
  config.horizons = {128, 256, 512};
  config.seeds = {1, 2, 3, 4};
  config.workers = 1;
  AggregateReport serial = run_experiment(config);
  config.workers = 4;
  AggregateReport parallel = run_experiment(config);
  CHECK(serial.aggregate_csv() == parallel.aggregate_csv());
  // rerun: byte-identical aggregate
  AggregateReport again = run_experiment(config);
  CHECK(parallel.aggregate_csv() == again.aggregate_csv());
}

TEST_CASE("experiment outputs land on disk and round-trip") {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "atb_harness_test_out";
  std::filesystem::remove_all(dir);

  ExperimentConfig config;
  config.environment = quadratic_spec(0.8, "bernoulli");
  config.strategy = StrategySpec::from_json({{"kind", "atb"}, {"epsilon", 0.2}, {"gamma", 0.5}});
  config.horizons = {64, 128};
  config.seeds = {1, 2};
  config.out_dir = dir.string();
  config.check_clean = true;
  AggregateReport report = run_experiment(config);

  CHECK(std::filesystem::exists(dir / "run_s1_T64.csv"));
  CHECK(std::filesystem::exists(dir / "run_s2_T128.csv"));
  CHECK(std::filesystem::exists(dir / "aggregate.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));
  REQUIRE(report.clean_fraction.has_value());
  CHECK(*report.clean_fraction >= 0.0);

  // the trajectory CSV round-trips exactly
  std::ifstream is(dir / "run_s1_T64.csv");
  RunRecord back = RunRecord::read_csv(is);
  CHECK(back.rows.size() == 64);
  std::ostringstream rewritten;
  back.write_csv(rewritten);
  std::ifstream is2(dir / "run_s1_T64.csv");
  std::stringstream original;
  original << is2.rdbuf();
  CHECK(rewritten.str() == original.str());

  std::filesystem::remove_all(dir);
}

TEST_CASE("simple regret series follows the min-radius recommendation rule") {
  // synthetic trajectory: radii 0.5, 0.3, 0.4 -> T* = 2 from checkpoint 2 on
  RunRecord record;
  for (int t = 1; t <= 3; ++t) {
    StepRow row;
    row.t = static_cast<std::uint64_t>(t);
    row.arm.coords = {ArmCoordinate{0.1 * t}};
    row.radius_bt = t == 2 ? 0.3 : (t == 1 ? 0.5 : 0.4);
    record.rows.push_back(row);
  }
  Environment env(make_power(1, {2.0}, {1.0}, {0.2}), NoiseModel{});
  auto series = simple_regret_series(record, env, {1, 2, 3});
  REQUIRE(series.size() == 3);
  CHECK(series[0] == doctest::Approx(env.mu_star() - env.mean(record.rows[0].arm)));
  CHECK(series[1] == doctest::Approx(env.mu_star() - env.mean(record.rows[1].arm)));
  CHECK(series[2] == series[1]);  // radius 0.4 does not beat 0.3
  for (double s : series) CHECK(s >= 0.0);
}

TEST_CASE("simple regret is zero on constant environments") {
  Environment env(make_constant(1, 0.7), NoiseModel{NoiseModel::Kind::deterministic, 0.0});
  auto trees = std::make_shared<TreeSpace>(TreeSpace::dyadic(1));
  EngineParams params;
  params.epsilon = 0.5;
  params.gamma = 0.5;
  Rng rng(3);
  RunRecord record = run(trees, params, env, 32, rng);
  auto series = simple_regret_series(record, env, {8, 16, 32});
  for (double s : series) CHECK(s == 0.0);
}

TEST_CASE("configs round-trip through JSON") {
  ExperimentConfig config;
  config.environment = quadratic_spec(0.8, "bernoulli");
  config.strategy = StrategySpec::from_json({{"kind", "ucb1"}, {"arms", 9}});
  config.horizons = {100, 200};
  config.seeds = {5, 6};
  config.master_seed = 17;
  ExperimentConfig back = ExperimentConfig::from_json(config.to_json());
  CHECK(back.horizons == config.horizons);
  CHECK(back.seeds == config.seeds);
  CHECK(back.master_seed == 17);
  CHECK(back.strategy.kind == StrategySpec::Kind::ucb1);
  REQUIRE(back.strategy.ucb1_arms.has_value());
  CHECK(*back.strategy.ucb1_arms == 9);
}

TEST_CASE("ucb1 experiments run through the harness") {
  ExperimentConfig config;
  config.environment = quadratic_spec(0.5, "bernoulli");
  config.strategy = StrategySpec::from_json({{"kind", "ucb1"}});
  config.horizons = {512};
  config.seeds = {1, 2, 3};
  AggregateReport report = run_experiment(config);
  REQUIRE(report.horizons.size() == 1);
  CHECK(report.horizons[0].n_seeds == 3);
  CHECK(report.horizons[0].median_rt > 0.0);
}
