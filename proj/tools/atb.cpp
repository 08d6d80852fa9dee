#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "atb/harness.hpp"

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw atb::ConfigError("cannot open " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

// Named environment presets for the flag-style invocation.
nlohmann::json env_spec(const std::string& name, int p, const std::string& noise,
                        double x_star, std::uint64_t horizon) {
  nlohmann::json noise_j{{"kind", noise}};
  if (name == "quadratic") {
    return {{"family", "power"},
            {"p", 1},
            {"alphas", {2.0}},
            {"coeffs", {1.0}},
            {"x_star", {x_star}},
            {"noise", noise_j}};
  }
  if (name == "mixed") {
    return {{"family", "power"},
            {"p", 2},
            {"alphas", {2.0, 4.0}},
            {"coeffs", {1.0, 1.0}},
            {"x_star", {x_star, x_star}},
            {"noise", noise_j}};
  }
  if (name == "log-peak" || name == "exp-flat" || name == "mixed-exponent") {
    return {{"family", "pathological"}, {"kind", name}, {"noise", noise_j}};
  }
  if (name == "adversarial") {
    int level = atb::adversarial_level_for(1.0, horizon);
    return {{"family", "adversarial"}, {"beta", 1.0},     {"level", level},
            {"arm_index", 1},          {"horizon", horizon}, {"p", p},
            {"noise", noise_j}};
  }
  if (name == "constant") {
    return {{"family", "constant"}, {"p", p}, {"value", 0.5}, {"noise", noise_j}};
  }
  throw atb::ConfigError("unknown environment preset '" + name + "'");
}

int do_report(const std::string& in_dir, bool with_slope) {
  std::ifstream is(std::filesystem::path(in_dir) / "aggregate.csv");
  if (!is) throw atb::ConfigError("cannot open " + in_dir + "/aggregate.csv");
  std::string line;
  if (!std::getline(is, line)) throw atb::ConfigError("empty aggregate.csv");
  std::vector<double> horizons, medians_rt, medians_st;
  nlohmann::json rows = nlohmann::json::array();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double h, n, mrt, q25rt, q75rt, mst, q25st, q75st;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &h, &n, &mrt, &q25rt,
                    &q75rt, &mst, &q25st, &q75st) != 8)
      throw atb::ConfigError("malformed aggregate row: " + line);
    horizons.push_back(h);
    medians_rt.push_back(mrt);
    medians_st.push_back(mst);
    rows.push_back({{"horizon", h},
                    {"n_seeds", n},
                    {"median_RT", mrt},
                    {"median_ST", mst}});
  }
  nlohmann::json out{{"in", in_dir}, {"horizons", rows}};
  if (with_slope) {
    if (horizons.size() < 3)
      throw atb::ConfigError("slope fits need at least 3 horizons");
    atb::SlopeFit rt = atb::fit_slope(horizons, medians_rt);
    out["rt_slope"] = {{"slope", rt.slope}, {"intercept", rt.intercept}};
    bool st_ok = true;
    for (double v : medians_st)
      if (!(v > 0.0)) st_ok = false;
    if (st_ok) {
      atb::SlopeFit st = atb::fit_slope(horizons, medians_st);
      out["st_slope"] = {{"slope", st.slope}, {"intercept", st.intercept}};
    }
  }
  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-treed bandit experiments"};
  app.require_subcommand(1);

  // --- run: a single seeded run (or a small config-driven experiment) ---
  auto* run_cmd = app.add_subcommand("run", "Run one seeded replication");
  std::string run_config, run_env = "quadratic", run_noise = "bernoulli", run_out;
  int run_p = 1;
  double run_eps = 0.1, run_gamma = 0.5, run_xstar = 0.8;
  bool run_quality_free = false;
  std::uint64_t run_horizon = 1024, run_seed = 1;
  std::string run_strategy = "atb";
  run_cmd->add_option("--config", run_config, "Experiment config JSON (overrides flags)");
  run_cmd->add_option("--env", run_env, "Environment preset");
  run_cmd->add_option("--p", run_p, "Dimension (presets that take one)");
  run_cmd->add_option("--noise", run_noise, "deterministic|bernoulli|truncated-gaussian");
  run_cmd->add_option("--epsilon", run_eps, "Error probability");
  run_cmd->add_option("--gamma", run_gamma, "Quality parameter");
  run_cmd->add_flag("--quality-free", run_quality_free, "Use gamma = 1/ln(T)");
  run_cmd->add_option("--x-star", run_xstar, "Maximum location for power presets");
  run_cmd->add_option("--horizon", run_horizon, "Number of steps");
  run_cmd->add_option("--seed", run_seed, "Run seed");
  run_cmd->add_option("--strategy", run_strategy, "atb|ucb1|uniform");
  run_cmd->add_option("--out", run_out, "Output directory");

  // --- sweep: a config-driven multi-seed experiment ---
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config-driven experiment");
  std::string sweep_config;
  sweep_cmd->add_option("--config", sweep_config, "Experiment config JSON")->required();

  // --- report: aggregate an output directory ---
  auto* report_cmd = app.add_subcommand("report", "Summarise an experiment directory");
  std::string report_in;
  bool report_slope = false;
  report_cmd->add_option("--in", report_in, "Experiment output directory")->required();
  report_cmd->add_flag("--fit-slope", report_slope, "Fit log-log slopes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      atb::ExperimentConfig config;
      if (!run_config.empty()) {
        config = atb::ExperimentConfig::from_json(load_json_file(run_config));
      } else {
        config.environment = env_spec(run_env, run_p, run_noise, run_xstar, run_horizon);
        nlohmann::json strat{{"kind", run_strategy}};
        if (run_strategy == "atb") {
          strat["epsilon"] = run_eps;
          if (run_quality_free)
            strat["quality_free"] = true;
          else
            strat["gamma"] = run_gamma;
        }
        config.strategy = atb::StrategySpec::from_json(strat);
        config.horizons = {run_horizon};
        config.seeds = {run_seed};
        config.out_dir = run_out;
      }
      atb::AggregateReport report = atb::run_experiment(config);
      std::cout << report.to_json().dump(2) << std::endl;
      return 0;
    }
    if (sweep_cmd->parsed()) {
      atb::ExperimentConfig config = atb::ExperimentConfig::from_json(load_json_file(sweep_config));
      atb::AggregateReport report = atb::run_experiment(config);
      std::cout << report.to_json().dump(2) << std::endl;
      return 0;
    }
    if (report_cmd->parsed()) return do_report(report_in, report_slope);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
