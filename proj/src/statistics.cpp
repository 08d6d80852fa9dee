#include "atb/statistics.hpp"

#include <cmath>

namespace atb {

EngineConstants EngineConstants::make(double epsilon, double gamma, int p, int q,
                                      double radius_scale, double optimism_scale) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (p < 1) throw ConfigError("dimension must be >= 1");
  if (q < 2) throw ConfigError("max arity must be >= 2");
  if (!(radius_scale > 0.0 && radius_scale <= 1.0))
    throw ConfigError("radius_scale must lie in (0, 1]");
  if (!(optimism_scale > 0.0 && optimism_scale <= 1.0))
    throw ConfigError("optimism_scale must lie in (0, 1]");
  EngineConstants c;
  c.epsilon = epsilon;
  c.gamma = gamma;
  c.p = p;
  c.q = q;
  c.tau = 4.0 / epsilon;
  c.nu = 8.0 * std::sqrt(2.0 / gamma);
  c.radius_scale = radius_scale;
  c.optimism_scale = optimism_scale;
  return c;
}

double EngineConstants::radius(std::uint64_t n, double log_rho_value) const {
  return radius_scale * confidence_radius(n, log_rho_value, tau);
}

void CellStats::add(double reward) {
  ++hits;
  double y = reward - comp_;
  double t = reward_sum + y;
  comp_ = (t - reward_sum) - y;
  reward_sum = t;
}

double CellStats::mean() const {
  if (hits == 0) throw ContractViolation("mean of an unhit cell is undefined");
  return reward_sum / static_cast<double>(hits);
}

double confidence_radius(std::uint64_t n, double log_rho_value, double tau) {
  if (log_rho_value < 0.0) throw ContractViolation("log rho must be nonnegative");
  if (!(tau > 0.0)) throw ContractViolation("tau must be positive");
  if (n == 0) return kInfinity;
  double nd = static_cast<double>(n);
  return 2.0 * std::sqrt((log_rho_value + std::log(tau + nd)) / nd);
}

std::pair<double, double> mean_bounds(const CellStats& stats, double radius) {
  double m = stats.mean();
  return {m - radius, m + radius};
}

double index_value(const CellStats& stats, double radius, const EngineConstants& constants) {
  if (stats.hits == 0) return kInfinity;
  return stats.mean() + constants.index_multiplier() * radius;
}

WidthEstimate width_estimate(const std::vector<PairIdx>& pairs,
                             const std::vector<CellStats>& cells,
                             const std::vector<double>& radii) {
  WidthEstimate best;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairIdx& pr = pairs[i];
    const CellStats& c1 = cells[pr.first];
    const CellStats& c2 = cells[pr.second];
    if (c1.hits == 0 || c2.hits == 0) continue;
    double value = (c1.mean() - radii[pr.first]) - (c2.mean() + radii[pr.second]);
    if (value > best.value) {
      best.value = value;
      best.axis = pr.axis;
      best.pair_index = i;
    }
  }
  return best;
}

}  // namespace atb
