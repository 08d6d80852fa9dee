#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atb/box.hpp"
#include "atb/rng.hpp"
#include "atb/tree.hpp"

namespace atb {

struct NoiseModel {
  enum class Kind { deterministic, bernoulli, truncated_gaussian };
  Kind kind = Kind::bernoulli;
  double sigma = 0.1;  // truncated_gaussian only

  // Truncation biases the conditional mean near the boundary; callers must
  // keep this model out of mean-sensitive checks.
  bool mean_faithful() const { return kind != Kind::truncated_gaussian; }

  static NoiseModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct BoxMean {
  enum class Method { closed_form, quadrature, monte_carlo };
  double value = 0.0;
  double std_error = 0.0;  // nonzero only for monte_carlo
  Method method = Method::closed_form;
};

// A reward function on the arm space with a disclosed supremum.
struct RewardFunction {
  int p = 1;
  std::string family;
  std::function<double(const ArmPoint&)> eval;
  double mu_star = 1.0;
  std::vector<ArmPoint> maxima;
  // Exact conditional mean on a box, when the family admits one.
  std::function<double(const TreeSpace&, const Box&)> exact_box_mean;
  // Exact minimum over a box, when available (badness diagnostics).
  std::function<double(const TreeSpace&, const Box&)> exact_box_min;

  double operator()(const ArmPoint& x) const { return eval(x); }
};

// mu(x) = 1 - sum_i c_i (|x_i - x*_i| / m_i)^alpha_i / sum_i c_i, with
// m_i = max(x*_i, 1 - x*_i): the separable-maximum family, affinely
// normalised onto [0,1] with mu(x*) = 1.
RewardFunction make_power(int p, std::vector<double> alphas, std::vector<double> coeffs,
                          std::vector<double> x_star);

// mu(x) = 1 - ||A(x - x*)||^alpha / M, M the maximum over the unit cube
// (attained at a corner). A must be positive definite.
RewardFunction make_elliptical(int p, const std::vector<std::vector<double>>& a_matrix,
                               double alpha, std::vector<double> x_star);

enum class PathologicalKind { log_peak, exp_flat, mixed_exponent };

// One-dimensional families that are not zooming continuous, remapped from
// [-1,1] onto [0,1] with the maximum at 0.5 and range [0,1].
RewardFunction make_pathological(PathologicalKind kind);

// The hard piecewise-constant instances mu_{l,k} from the lower-bound
// construction, on the first (dyadic) axis. alpha = 2^(-1/beta), or
// 1/sqrt(2T) when beta = 0. Bernoulli noise is mandatory for this family.
RewardFunction make_adversarial(double beta, int level, int arm_index, std::uint64_t horizon,
                                int p = 1);

// Smallest l with 2^(l(1+2/beta)) >= 4T; l = 1 when beta = 0.
int adversarial_level_for(double beta, std::uint64_t horizon);

// The canonical nested nodes U_{i,j} of the construction: child 0 and child 1
// of U_{i,j}, then child 0 of each. j is 1-based.
NodeId adversarial_node(int i, int j);

RewardFunction make_constant(int p, double value);

// An arbitrary evaluator with a disclosed supremum; no exact box oracle.
RewardFunction make_custom(int p, std::string family, double mu_star,
                           std::function<double(const ArmPoint&)> eval);

// A reward function paired with a noise model.
class Environment {
 public:
  Environment(RewardFunction f, NoiseModel noise);

  static Environment from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int dimension() const { return f_.p; }
  double mu_star() const { return f_.mu_star; }
  const RewardFunction& reward() const { return f_; }
  const NoiseModel& noise() const { return noise_; }

  double mean(const ArmPoint& x) const { return f_.eval(x); }
  double sample_reward(const ArmPoint& x, Rng& rng) const;

  // E_pi[mu(x) | x in B]: closed form when the family has one, nested
  // adaptive quadrature for p <= 3 on dyadic axes, Monte-Carlo otherwise.
  BoxMean box_mean(const TreeSpace& trees, const Box& box) const;

  // Eq-badness diagnostics: delta = mu* - min on B, Delta = mu* - mu(B).
  // Minima fall back to a sampled estimate for families without one.
  double delta_badness(const TreeSpace& trees, const Box& box) const;
  double avg_badness(const TreeSpace& trees, const Box& box) const;

 private:
  RewardFunction f_;
  NoiseModel noise_;
};

double sample_reward(const RewardFunction& f, const NoiseModel& noise, const ArmPoint& x,
                     Rng& rng);

struct ZoomingProbePoint {
  double eps;
  double max_ratio;      // max over the probed neighbourhood family
  double witness_ratio;  // the shifted witness neighbourhood [x*-e^2, x*+e-e^2]
};

// Numerical probe of the zooming-continuity quotient for p = 1 families.
// Finite neighbourhood families make this evidence, not proof.
std::vector<ZoomingProbePoint> zooming_ratio_probe(const RewardFunction& f, double x_star,
                                                   const std::vector<double>& eps_schedule);

}  // namespace atb
