#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atb/baselines.hpp"
#include "atb/engine.hpp"
#include "atb/environment.hpp"
#include "atb/run_record.hpp"

namespace atb {

struct StrategySpec {
  enum class Kind { atb, ucb1, uniform };
  Kind kind = Kind::atb;
  EngineParams atb;
  std::optional<int> ucb1_arms;  // default: choose_grid_size(T)

  static StrategySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  nlohmann::json environment;
  std::optional<nlohmann::json> trees;  // default: dyadic axes of the env dimension
  StrategySpec strategy;
  std::vector<std::uint64_t> horizons;  // strictly increasing
  std::vector<std::uint64_t> seeds;     // distinct
  std::string out_dir;                  // empty: keep everything in memory
  int workers = 0;                      // 0: hardware concurrency
  bool check_clean = false;
  std::uint64_t master_seed = 1;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

// Ordinary least squares of ln(value) on ln(horizon). Values must be
// positive and at least three points are required.
SlopeFit fit_slope(const std::vector<double>& horizons, const std::vector<double>& values);

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  double cum_regret = 0.0;
  double simple_regret = 0.0;
  std::uint64_t splits = 0;
  std::uint64_t activations = 0;
  double seconds = 0.0;
  bool clean = true;
  bool clean_checked = false;
};

struct HorizonAggregate {
  std::uint64_t horizon = 0;
  std::size_t n_seeds = 0;
  double median_rt = 0.0, q25_rt = 0.0, q75_rt = 0.0;
  double median_st = 0.0, q25_st = 0.0, q75_st = 0.0;
};

struct AggregateReport {
  std::vector<HorizonAggregate> horizons;
  std::vector<RunSummary> runs;
  std::optional<SlopeFit> rt_slope;
  std::optional<SlopeFit> st_slope;
  std::optional<double> clean_fraction;
  double total_seconds = 0.0;

  nlohmann::json to_json() const;
  std::string aggregate_csv() const;  // deterministic given the config
};

// Runs every (seed, horizon) replication (concurrently up to the worker
// count), writes one trajectory CSV per run plus aggregate.csv and
// report.json when out_dir is set, and aggregates medians and slopes.
AggregateReport run_experiment(const ExperimentConfig& config);

// S_T = mu* - mu(x-hat at T) at each checkpoint, using the running
// min-radius rule over the recorded radius column.
std::vector<double> simple_regret_series(const RunRecord& record, const Environment& env,
                                         const std::vector<std::uint64_t>& checkpoints);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

}  // namespace atb
