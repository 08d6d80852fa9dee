#include "atb/baselines.hpp"

#include "atb/statistics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace atb {

int choose_grid_size(std::uint64_t horizon) {
  if (horizon < 1) throw ContractViolation("horizon must be >= 1");
  int k = 1;
  while (static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k) *
             static_cast<std::uint64_t>(k) <
         horizon)
    ++k;
  return k;
}

std::vector<ArmPoint> grid_centers(int p, int k) {
  if (p < 1 || k < 1) throw ContractViolation("grid needs p >= 1, K >= 1");
  int per_axis = p == 1 ? k : static_cast<int>(std::ceil(std::pow(k, 1.0 / p) - 1e-12));
  per_axis = std::max(per_axis, 1);
  std::vector<ArmPoint> arms;
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  for (;;) {
    ArmPoint x;
    x.coords.reserve(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i)
      x.coords.push_back((idx[static_cast<std::size_t>(i)] + 0.5) / per_axis);
    arms.push_back(std::move(x));
    int axis = p - 1;
    while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == per_axis)
      idx[static_cast<std::size_t>(axis--)] = 0;
    if (axis < 0) break;
  }
  return arms;
}

double discretisation_regret(const Environment& env, int k) {
  double best = -kInfinity;
  for (const ArmPoint& x : grid_centers(env.dimension(), k))
    best = std::max(best, env.mean(x));
  return env.mu_star() - best;
}

RunRecord ucb1_run(const Environment& env, int k, std::uint64_t horizon, Rng& rng) {
  if (k < 1 || horizon < 1) throw ContractViolation("ucb1 needs K >= 1, T >= 1");
  std::vector<ArmPoint> arms = grid_centers(env.dimension(), k);
  std::size_t n_arms = arms.size();
  std::vector<std::uint64_t> pulls(n_arms, 0);
  std::vector<double> sums(n_arms, 0.0);

  RunRecord record;
  record.horizon = horizon;
  record.rows.reserve(horizon);
  double cum = 0.0;

  auto start = std::chrono::steady_clock::now();
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    std::size_t choice;
    double bonus;
    if (t <= n_arms) {
      choice = static_cast<std::size_t>(t - 1);  // play every arm once first
      bonus = kInfinity;
    } else {
      choice = 0;
      double best_ucb = -kInfinity;
      for (std::size_t a = 0; a < n_arms; ++a) {
        double b = std::sqrt(2.0 * std::log(static_cast<double>(t - 1)) /
                             static_cast<double>(pulls[a]));
        double ucb = sums[a] / static_cast<double>(pulls[a]) + b;
        if (ucb > best_ucb) {
          best_ucb = ucb;
          choice = a;
        }
      }
      bonus = std::sqrt(2.0 * std::log(static_cast<double>(t - 1)) /
                        static_cast<double>(pulls[choice]));
    }

    double reward = env.sample_reward(arms[choice], rng);
    pulls[choice] += 1;
    sums[choice] += reward;

    StepRow row;
    row.t = t;
    row.box = "arm" + std::to_string(choice);
    row.arm = arms[choice];
    row.reward = reward;
    row.mu_xt = env.mean(arms[choice]);
    row.inst_regret = env.mu_star() - row.mu_xt;
    cum += row.inst_regret;
    row.cum_regret = cum;
    row.radius_bt = bonus;
    record.rows.push_back(std::move(row));
  }
  auto end = std::chrono::steady_clock::now();
  record.total_seconds = std::chrono::duration<double>(end - start).count();

  // recommend the arm with the best final empirical mean
  std::size_t best_arm = 0;
  double best_mean = -kInfinity;
  for (std::size_t a = 0; a < n_arms; ++a) {
    if (pulls[a] == 0) continue;
    double m = sums[a] / static_cast<double>(pulls[a]);
    if (m > best_mean) {
      best_mean = m;
      best_arm = a;
    }
  }
  record.recommendation = arms[best_arm];
  record.t_star = horizon;
  return record;
}

RunRecord uniform_random_run(const Environment& env, std::uint64_t horizon, Rng& rng) {
  if (horizon < 1) throw ContractViolation("horizon must be >= 1");
  int p = env.dimension();
  RunRecord record;
  record.horizon = horizon;
  record.rows.reserve(horizon);
  double cum = 0.0;
  double best_seen = -kInfinity;
  ArmPoint best_arm;

  auto start = std::chrono::steady_clock::now();
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    ArmPoint x;
    x.coords.reserve(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) x.coords.push_back(rng.next_double());
    double reward = env.sample_reward(x, rng);

    StepRow row;
    row.t = t;
    row.box = "uniform";
    row.arm = x;
    row.reward = reward;
    row.mu_xt = env.mean(x);
    row.inst_regret = env.mu_star() - row.mu_xt;
    cum += row.inst_regret;
    row.cum_regret = cum;
    row.radius_bt = 0.0;
    record.rows.push_back(std::move(row));

    if (reward > best_seen) {
      best_seen = reward;
      best_arm = x;
      record.t_star = t;
    }
  }
  auto end = std::chrono::steady_clock::now();
  record.total_seconds = std::chrono::duration<double>(end - start).count();
  record.recommendation = best_arm;
  return record;
}

}  // namespace atb
