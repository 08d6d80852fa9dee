#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "atb/box.hpp"
#include "atb/error.hpp"

namespace atb {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Practical-scale defaults; 1.0 for both recovers the paper-literal
// algorithm. See EngineConstants below.
inline constexpr double kDefaultRadiusScale = 0.30;
inline constexpr double kDefaultOptimismScale = 1.0 / 128.0;

// The derived constants of a run. tau and nu follow the source formulas
// exactly; radius_scale and optimism_scale are engine-level dampers for the
// (very conservative) theory constants. radius_scale multiplies the
// confidence-radius coefficient; optimism_scale multiplies nu wherever the
// engine consumes it (the split trigger and the index multiplier). At scale
// 1/1 the engine is the literal algorithm.
struct EngineConstants {
  double epsilon;
  double gamma;
  int p;
  int q;
  double tau;  // 4 / epsilon
  double nu;   // 8 * sqrt(2 / gamma)
  double radius_scale = kDefaultRadiusScale;
  double optimism_scale = kDefaultOptimismScale;

  static EngineConstants make(double epsilon, double gamma, int p, int q,
                              double radius_scale = kDefaultRadiusScale,
                              double optimism_scale = kDefaultOptimismScale);

  double index_multiplier() const { return 1.0 + 2.0 * p * optimism_scale * nu; }
  double split_threshold() const { return optimism_scale * nu; }

  double radius(std::uint64_t n, double log_rho_value) const;
};

// Hit count and compensated reward sum for one tracked cell.
struct CellStats {
  std::uint64_t hits = 0;
  double reward_sum = 0.0;

  void add(double reward);
  double mean() const;  // requires hits > 0

 private:
  double comp_ = 0.0;  // Kahan carry
};

// The source confidence radius: n = 0 gives +infinity, otherwise
// 2 sqrt((log rho + ln(tau + n)) / n), natural logarithms throughout.
double confidence_radius(std::uint64_t n, double log_rho_value, double tau);

// (mean - r, mean + r). Bounds are deliberately not clipped to [0,1].
std::pair<double, double> mean_bounds(const CellStats& stats, double radius);

// mean + (1 + 2 p nu_effective) * r; +infinity when the cell is unhit.
// EngineConstants supplies nu_effective = optimism_scale * nu.
double index_value(const CellStats& stats, double radius, const EngineConstants& constants);

// Candidate pair referencing cells by position in a canonical key list.
struct PairIdx {
  std::size_t first;
  std::size_t second;
  int axis;
};

struct WidthEstimate {
  double value = -kInfinity;
  int axis = -1;                                            // argmax axis, -1 if none
  std::size_t pair_index = std::numeric_limits<std::size_t>::max();

  bool has_argmax() const { return axis >= 0; }
};

// W = max over pairs of (mean(C1) - r(C1)) - (mean(C2) + r(C2)); pairs with
// an unhit side contribute -infinity. Ties break on the first pair in the
// canonical order (strict improvement required).
WidthEstimate width_estimate(const std::vector<PairIdx>& pairs,
                             const std::vector<CellStats>& cells,
                             const std::vector<double>& radii);

}  // namespace atb
