#include <doctest.h>

#include <cmath>
#include <set>

#include "atb/baselines.hpp"

using namespace atb;

namespace {

Environment quadratic(NoiseModel::Kind kind) {
  return Environment(make_power(1, {2.0}, {1.0}, {0.5}), NoiseModel{kind, 0.1});
}

}  // namespace

TEST_CASE("grid size is the cube root, rounded up") {
  CHECK(choose_grid_size(1000) == 10);
  CHECK(choose_grid_size(8) == 2);
  CHECK(choose_grid_size(1) == 1);
  CHECK(choose_grid_size(9) == 3);
  CHECK(choose_grid_size(1001) == 11);
}

TEST_CASE("grid centers sit at cell midpoints") {
  auto arms = grid_centers(1, 4);
  REQUIRE(arms.size() == 4);
  CHECK(std::get<double>(arms[0].coords[0]) == doctest::Approx(0.125));
  CHECK(std::get<double>(arms[3].coords[0]) == doctest::Approx(0.875));
  auto arms2 = grid_centers(2, 4);
  CHECK(arms2.size() == 4);  // 2 per axis
}

TEST_CASE("a single arm is played forever") {
  Environment env = quadratic(NoiseModel::Kind::deterministic);
  Rng rng(4);
  RunRecord record = ucb1_run(env, 1, 100, rng);
  double center_gap = env.mu_star() - env.mean(grid_centers(1, 1)[0]);
  CHECK(record.final_cum_regret() == doctest::Approx(100.0 * center_gap).epsilon(1e-12));
  for (const StepRow& row : record.rows) CHECK(row.box == "arm0");
}

TEST_CASE("constant environments yield zero regret for all baselines") {
  Environment env(make_constant(1, 0.4), NoiseModel{NoiseModel::Kind::deterministic, 0.0});
  Rng rng(6);
  CHECK(ucb1_run(env, 5, 200, rng).final_cum_regret() == 0.0);
  CHECK(uniform_random_run(env, 200, rng).final_cum_regret() == 0.0);
}

TEST_CASE("every arm is played once during initialisation") {
  Environment env = quadratic(NoiseModel::Kind::bernoulli);
  Rng rng(8);
  RunRecord record = ucb1_run(env, 7, 50, rng);
  std::set<std::string> first;
  for (int t = 0; t < 7; ++t) first.insert(record.rows[static_cast<std::size_t>(t)].box);
  CHECK(first.size() == 7);
  // per-arm counts over the whole run sum to T
  std::map<std::string, int> counts;
  for (const StepRow& row : record.rows) counts[row.box]++;
  int total = 0;
  for (const auto& [arm, n] : counts) total += n;
  CHECK(total == 50);
}

TEST_CASE("discretisation regret is reported separately") {
  Environment env = quadratic(NoiseModel::Kind::deterministic);
  double d4 = discretisation_regret(env, 4);
  double d16 = discretisation_regret(env, 16);
  CHECK(d4 > 0.0);
  CHECK(d16 > 0.0);
  CHECK(d16 < d4);  // finer grids approximate better
}

TEST_CASE("uniform play has linear regret at the mean gap") {
  Environment env = quadratic(NoiseModel::Kind::deterministic);
  Rng rng(10);
  const std::uint64_t horizon = 20000;
  RunRecord record = uniform_random_run(env, horizon, rng);
  // E[mu] under uniform is 2/3, so the per-step regret averages 1/3
  CHECK(record.final_cum_regret() / static_cast<double>(horizon) ==
        doctest::Approx(1.0 / 3.0).epsilon(0.02));

  // doubling the horizon roughly doubles the regret
  Rng rng2(11);
  double r1 = uniform_random_run(env, 10000, rng2).final_cum_regret();
  double r2 = uniform_random_run(env, 20000, rng2).final_cum_regret();
  CHECK(std::fabs(r2 / r1 - 2.0) < 0.2);
}

TEST_CASE("ucb1 concentrates on the best grid arm") {
  Environment env = quadratic(NoiseModel::Kind::bernoulli);
  Rng rng(12);
  RunRecord record = ucb1_run(env, 5, 20000, rng);
  std::map<std::string, int> counts;
  for (const StepRow& row : record.rows) counts[row.box]++;
  // centers: 0.1 0.3 0.5 0.7 0.9; arm2 at 0.5 is optimal
  int best = counts["arm2"];
  for (const auto& [arm, n] : counts)
    if (arm != "arm2") CHECK(best > n);
  CHECK(env.mean(record.recommendation) >= 0.9);
}
