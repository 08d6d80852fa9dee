#include "atb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace atb {

StrategySpec StrategySpec::from_json(const nlohmann::json& j) {
  StrategySpec s;
  std::string kind = j.value("kind", "atb");
  if (kind == "atb") {
    s.kind = Kind::atb;
    s.atb = EngineParams::from_json(j);
  } else if (kind == "ucb1" || kind == "ucb1-fixed-grid") {
    s.kind = Kind::ucb1;
    if (j.contains("arms")) s.ucb1_arms = j.at("arms").get<int>();
  } else if (kind == "uniform" || kind == "uniform-random") {
    s.kind = Kind::uniform;
  } else {
    throw ConfigError("unknown strategy kind '" + kind + "'");
  }
  return s;
}

nlohmann::json StrategySpec::to_json() const {
  switch (kind) {
    case Kind::atb: {
      nlohmann::json j = atb.to_json();
      j["kind"] = "atb";
      return j;
    }
    case Kind::ucb1: {
      nlohmann::json j{{"kind", "ucb1"}};
      if (ucb1_arms) j["arms"] = *ucb1_arms;
      return j;
    }
    case Kind::uniform:
      return {{"kind", "uniform"}};
  }
  return {};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.environment = j.at("environment");
  if (j.contains("trees")) c.trees = j.at("trees");
  c.strategy = StrategySpec::from_json(j.value("strategy", nlohmann::json{{"kind", "atb"}}));
  if (j.contains("horizons")) {
    c.horizons = j.at("horizons").get<std::vector<std::uint64_t>>();
  } else {
    // default checkpoint grid: powers of two, evenly spaced log-abscissae
    for (int e = 10; e <= 16; ++e) c.horizons.push_back(1ull << e);
  }
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.out_dir = j.value("out", "");
  c.workers = j.value("workers", 0);
  c.check_clean = j.value("check_clean", false);
  c.master_seed = j.value("master_seed", std::uint64_t{1});
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"environment", environment},
                   {"strategy", strategy.to_json()},
                   {"horizons", horizons},
                   {"seeds", seeds},
                   {"out", out_dir},
                   {"workers", workers},
                   {"check_clean", check_clean},
                   {"master_seed", master_seed}};
  if (trees) j["trees"] = *trees;
  return j;
}

void ExperimentConfig::validate() const {
  if (horizons.empty()) throw ConfigError("config needs at least one horizon");
  for (std::size_t i = 1; i < horizons.size(); ++i)
    if (horizons[i] <= horizons[i - 1])
      throw ConfigError("horizons must be strictly increasing");
  if (seeds.empty()) throw ConfigError("config needs at least one seed");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t k = i + 1; k < seeds.size(); ++k)
      if (seeds[i] == seeds[k]) throw ConfigError("seeds must be distinct");
}

SlopeFit fit_slope(const std::vector<double>& horizons, const std::vector<double>& values) {
  if (horizons.size() != values.size() || horizons.size() < 3)
    throw ContractViolation("slope fit needs at least 3 matched points");
  std::size_t n = horizons.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(horizons[i] > 0.0) || !(values[i] > 0.0))
      throw ContractViolation("slope fit needs positive horizons and values");
    lx[i] = std::log(horizons[i]);
    ly[i] = std::log(values[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractViolation("quantile of an empty set");
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<double> simple_regret_series(const RunRecord& record, const Environment& env,
                                         const std::vector<std::uint64_t>& checkpoints) {
  std::vector<double> out;
  out.reserve(checkpoints.size());
  double best_radius = kInfinity;
  const ArmPoint* best_arm = nullptr;
  std::size_t row = 0;
  for (std::uint64_t cp : checkpoints) {
    while (row < record.rows.size() && record.rows[row].t <= cp) {
      if (record.rows[row].radius_bt < best_radius) {
        best_radius = record.rows[row].radius_bt;
        best_arm = &record.rows[row].arm;
      }
      ++row;
    }
    if (!best_arm) throw ContractViolation("checkpoint precedes the first step");
    out.push_back(env.mu_star() - env.mean(*best_arm));
  }
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunSummary execute_one(const ExperimentConfig& config, const Environment& env,
                       std::shared_ptr<const TreeSpace> trees, std::uint64_t seed,
                       std::uint64_t horizon) {
  Rng rng(Rng::derive_seed(config.master_seed, seed, horizon));
  RunRecord record;
  switch (config.strategy.kind) {
    case StrategySpec::Kind::atb:
      record = run(trees, config.strategy.atb, env, horizon, rng);
      break;
    case StrategySpec::Kind::ucb1: {
      int k = config.strategy.ucb1_arms.value_or(choose_grid_size(horizon));
      record = ucb1_run(env, k, horizon, rng);
      break;
    }
    case StrategySpec::Kind::uniform:
      record = uniform_random_run(env, horizon, rng);
      break;
  }

  RunSummary s;
  s.seed = seed;
  s.horizon = horizon;
  s.cum_regret = record.final_cum_regret();
  s.simple_regret = env.mu_star() - env.mean(record.recommendation);
  s.splits = record.splits;
  s.activations = record.activations;
  s.seconds = record.total_seconds;

  if (config.check_clean && config.strategy.kind == StrategySpec::Kind::atb) {
    s.clean_checked = true;
    s.clean = check_clean(record, env, trees, config.strategy.atb).clean;
  }

  if (!config.out_dir.empty()) {
    std::filesystem::path path = std::filesystem::path(config.out_dir) /
                                 ("run_s" + std::to_string(seed) + "_T" +
                                  std::to_string(horizon) + ".csv");
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    record.write_csv(os);
  }
  return s;
}

}  // namespace

std::string AggregateReport::aggregate_csv() const {
  std::string out = "horizon,n_seeds,median_RT,q25_RT,q75_RT,median_ST,q25_ST,q75_ST\n";
  for (const HorizonAggregate& h : horizons) {
    out += std::to_string(h.horizon) + ',' + std::to_string(h.n_seeds) + ',' +
           fmt17(h.median_rt) + ',' + fmt17(h.q25_rt) + ',' + fmt17(h.q75_rt) + ',' +
           fmt17(h.median_st) + ',' + fmt17(h.q25_st) + ',' + fmt17(h.q75_st) + '\n';
  }
  return out;
}

nlohmann::json AggregateReport::to_json() const {
  nlohmann::json hs = nlohmann::json::array();
  for (const HorizonAggregate& h : horizons) {
    hs.push_back({{"horizon", h.horizon},
                  {"n_seeds", h.n_seeds},
                  {"median_RT", h.median_rt},
                  {"q25_RT", h.q25_rt},
                  {"q75_RT", h.q75_rt},
                  {"median_ST", h.median_st},
                  {"q25_ST", h.q25_st},
                  {"q75_ST", h.q75_st}});
  }
  nlohmann::json rs = nlohmann::json::array();
  for (const RunSummary& r : runs) {
    nlohmann::json rj{{"seed", r.seed},
                      {"horizon", r.horizon},
                      {"cum_regret", r.cum_regret},
                      {"simple_regret", r.simple_regret},
                      {"splits", r.splits},
                      {"activations", r.activations},
                      {"seconds", r.seconds}};
    if (r.clean_checked) rj["clean"] = r.clean;
    rs.push_back(rj);
  }
  nlohmann::json j{{"horizons", hs}, {"runs", rs}, {"total_seconds", total_seconds}};
  if (rt_slope)
    j["rt_slope"] = {{"slope", rt_slope->slope},
                     {"intercept", rt_slope->intercept},
                     {"residual_rms", rt_slope->residual_rms}};
  if (st_slope)
    j["st_slope"] = {{"slope", st_slope->slope},
                     {"intercept", st_slope->intercept},
                     {"residual_rms", st_slope->residual_rms}};
  if (clean_fraction) j["clean_fraction"] = *clean_fraction;
  return j;
}

AggregateReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  Environment env = Environment::from_json(config.environment);
  std::shared_ptr<const TreeSpace> trees;
  if (config.trees)
    trees = std::make_shared<TreeSpace>(TreeSpace::from_json(*config.trees));
  else
    trees = std::make_shared<TreeSpace>(TreeSpace::dyadic(env.dimension()));

  if (!config.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.out_dir);
  }

  struct Task {
    std::uint64_t seed, horizon;
  };
  std::vector<Task> tasks;
  for (std::uint64_t seed : config.seeds)
    for (std::uint64_t horizon : config.horizons) tasks.push_back({seed, horizon});

  std::vector<RunSummary> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  int n_workers = config.workers > 0
                      ? config.workers
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_workers = std::min<int>(n_workers, static_cast<int>(tasks.size()));

  auto start = std::chrono::steady_clock::now();
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = execute_one(config, env, trees, tasks[i].seed, tasks[i].horizon);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  AggregateReport report;
  report.runs = results;
  for (std::uint64_t horizon : config.horizons) {
    std::vector<double> rts, sts;
    for (const RunSummary& r : results) {
      if (r.horizon != horizon) continue;
      rts.push_back(r.cum_regret);
      sts.push_back(r.simple_regret);
    }
    HorizonAggregate h;
    h.horizon = horizon;
    h.n_seeds = rts.size();
    h.median_rt = median(rts);
    h.q25_rt = quantile(rts, 0.25);
    h.q75_rt = quantile(rts, 0.75);
    h.median_st = median(sts);
    h.q25_st = quantile(sts, 0.25);
    h.q75_st = quantile(sts, 0.75);
    report.horizons.push_back(h);
  }

  if (config.horizons.size() >= 3) {
    std::vector<double> hs, rmed, smed;
    for (const HorizonAggregate& h : report.horizons) {
      hs.push_back(static_cast<double>(h.horizon));
      rmed.push_back(h.median_rt);
      smed.push_back(h.median_st);
    }
    try {
      report.rt_slope = fit_slope(hs, rmed);
    } catch (const ContractViolation&) {
    }
    try {
      report.st_slope = fit_slope(hs, smed);
    } catch (const ContractViolation&) {
    }
  }

  if (config.check_clean && config.strategy.kind == StrategySpec::Kind::atb) {
    std::size_t checked = 0, clean = 0;
    for (const RunSummary& r : results) {
      if (!r.clean_checked) continue;
      ++checked;
      if (r.clean) ++clean;
    }
    if (checked > 0)
      report.clean_fraction = static_cast<double>(clean) / static_cast<double>(checked);
  }

  auto end = std::chrono::steady_clock::now();
  report.total_seconds = std::chrono::duration<double>(end - start).count();

  if (!config.out_dir.empty()) {
    std::ofstream agg(std::filesystem::path(config.out_dir) / "aggregate.csv");
    if (!agg) throw ConfigError("cannot write aggregate.csv");
    agg << report.aggregate_csv();
    std::ofstream rep(std::filesystem::path(config.out_dir) / "report.json");
    if (!rep) throw ConfigError("cannot write report.json");
    nlohmann::json j = report.to_json();
    j["config"] = config.to_json();
    rep << j.dump(2) << '\n';
  }
  return report;
}

}  // namespace atb
