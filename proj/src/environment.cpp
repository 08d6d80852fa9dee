#include "atb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "atb/statistics.hpp"
#include <nlohmann/json.hpp>

namespace atb {

namespace {

double real_coord(const ArmPoint& x, int i) {
  const ArmCoordinate& c = x.coords.at(static_cast<std::size_t>(i));
  if (!std::holds_alternative<double>(c))
    throw ContractViolation("expected a real coordinate on axis " + std::to_string(i));
  return std::get<double>(c);
}

ArmPoint real_point(const std::vector<double>& v) {
  ArmPoint x;
  x.coords.assign(v.begin(), v.end());
  return x;
}

void check_unit(const std::vector<double>& v, const char* what) {
  for (double c : v)
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0,1]");
}

// Integral of |x - c|^alpha over [a, b] via the signed antiderivative
// F(u) = sign(u) |u|^(alpha+1) / (alpha+1).
double abs_power_integral(double a, double b, double c, double alpha) {
  auto F = [&](double u) {
    double v = std::pow(std::fabs(u), alpha + 1.0) / (alpha + 1.0);
    return u < 0 ? -v : v;
  };
  return F(b - c) - F(a - c);
}

bool all_axes_dyadic(const TreeSpace& trees) {
  for (int i = 0; i < trees.dimension(); ++i)
    if (!trees.axis(i).is_dyadic()) return false;
  return true;
}

// Adaptive Simpson on [a, b].
double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol) {
  struct Rec {
    static double go(const std::function<double(double)>& g, double a, double m, double b,
                     double fa, double fm, double fb, double whole, double tol, int depth) {
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      double flm = g(lm), frm = g(rm);
      double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return go(g, a, lm, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
             go(g, m, rm, b, fm, frm, fb, right, tol * 0.5, depth - 1);
    }
  };
  double m = 0.5 * (a + b);
  double fa = g(a), fm = g(m), fb = g(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec::go(g, a, m, b, fa, fm, fb, whole, tol, 40);
}

constexpr double kQuadratureTol = 1e-9;

double quadrature_mean(const RewardFunction& f, const std::vector<DyadicInterval>& iv) {
  int p = f.p;
  std::vector<double> point(static_cast<std::size_t>(p), 0.0);
  std::function<double(int)> integrate = [&](int axis) -> double {
    const DyadicInterval& I = iv[static_cast<std::size_t>(axis)];
    auto g = [&](double x) {
      point[static_cast<std::size_t>(axis)] = x;
      if (axis + 1 == p) return f.eval(real_point(point));
      return integrate(axis + 1);
    };
    return adaptive_simpson(g, I.lo, I.hi, kQuadratureTol) / (I.hi - I.lo);
  };
  return integrate(0);
}

}  // namespace

RewardFunction make_power(int p, std::vector<double> alphas, std::vector<double> coeffs,
                          std::vector<double> x_star) {
  if (p < 1) throw ConfigError("dimension must be >= 1");
  if (alphas.size() != static_cast<std::size_t>(p) ||
      coeffs.size() != static_cast<std::size_t>(p) ||
      x_star.size() != static_cast<std::size_t>(p))
    throw ConfigError("power family needs p alphas, p coefficients and a p-dim maximum");
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("power exponents must be positive");
  for (double c : coeffs)
    if (!(c > 0.0)) throw ConfigError("power coefficients must be positive");
  check_unit(x_star, "x_star");

  std::vector<double> scale(static_cast<std::size_t>(p));
  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    scale[static_cast<std::size_t>(i)] = std::max(x_star[static_cast<std::size_t>(i)],
                                                  1.0 - x_star[static_cast<std::size_t>(i)]);
    total += coeffs[static_cast<std::size_t>(i)];
  }

  RewardFunction f;
  f.p = p;
  f.family = "power";
  f.mu_star = 1.0;
  f.maxima = {real_point(x_star)};
  f.eval = [p, alphas, coeffs, x_star, scale, total](const ArmPoint& x) {
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      std::size_t s = static_cast<std::size_t>(i);
      sum += coeffs[s] * std::pow(std::fabs(real_coord(x, i) - x_star[s]) / scale[s], alphas[s]);
    }
    return 1.0 - sum / total;
  };
  f.exact_box_mean = [p, alphas, coeffs, x_star, scale, total](const TreeSpace& trees,
                                                               const Box& box) {
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      std::size_t s = static_cast<std::size_t>(i);
      if (!trees.axis(i).is_dyadic())
        throw UnsupportedError("power family means need dyadic axes");
      DyadicInterval iv = dyadic_interval(box.nodes[s]);
      double avg = abs_power_integral(iv.lo, iv.hi, x_star[s], alphas[s]) / (iv.hi - iv.lo);
      sum += coeffs[s] * avg / std::pow(scale[s], alphas[s]);
    }
    return 1.0 - sum / total;
  };
  f.exact_box_min = [p, alphas, coeffs, x_star, scale, total](const TreeSpace& trees,
                                                              const Box& box) {
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      std::size_t s = static_cast<std::size_t>(i);
      if (!trees.axis(i).is_dyadic())
        throw UnsupportedError("power family minima need dyadic axes");
      DyadicInterval iv = dyadic_interval(box.nodes[s]);
      double dev = std::max(std::fabs(iv.lo - x_star[s]), std::fabs(iv.hi - x_star[s]));
      sum += coeffs[s] * std::pow(dev / scale[s], alphas[s]);
    }
    return 1.0 - sum / total;
  };
  return f;
}

RewardFunction make_elliptical(int p, const std::vector<std::vector<double>>& a_matrix,
                               double alpha, std::vector<double> x_star) {
  if (p < 1 || p > 20) throw ConfigError("elliptical family supports 1 <= p <= 20");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (x_star.size() != static_cast<std::size_t>(p))
    throw ConfigError("x_star must have dimension p");
  check_unit(x_star, "x_star");
  if (a_matrix.size() != static_cast<std::size_t>(p))
    throw ConfigError("matrix must be p x p");
  Eigen::MatrixXd A(p, p);
  for (int i = 0; i < p; ++i) {
    if (a_matrix[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(p))
      throw ConfigError("matrix must be p x p");
    for (int j = 0; j < p; ++j)
      A(i, j) = a_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success)
    throw ConfigError("elliptical matrix must be positive definite");

  Eigen::VectorXd star(p);
  for (int i = 0; i < p; ++i) star(i) = x_star[static_cast<std::size_t>(i)];

  auto norm_at = [A, star](const Eigen::VectorXd& v) { return (A * (v - star)).norm(); };

  // ||A(x - x*)|| is convex, so its maximum over a product of intervals is
  // attained at a corner.
  auto max_norm_over = [norm_at, p](const std::vector<DyadicInterval>& iv) {
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
      Eigen::VectorXd corner(p);
      for (int i = 0; i < p; ++i)
        corner(i) = (mask >> i) & 1u ? iv[static_cast<std::size_t>(i)].hi
                                     : iv[static_cast<std::size_t>(i)].lo;
      best = std::max(best, norm_at(corner));
    }
    return best;
  };

  std::vector<DyadicInterval> cube(static_cast<std::size_t>(p), DyadicInterval{0.0, 1.0});
  double big_m = std::pow(max_norm_over(cube), alpha);
  if (!(big_m > 0.0)) throw ConfigError("degenerate elliptical maximum");

  RewardFunction f;
  f.p = p;
  f.family = "elliptical";
  f.mu_star = 1.0;
  f.maxima = {real_point(x_star)};
  f.eval = [A, star, alpha, big_m, p](const ArmPoint& x) {
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v(i) = real_coord(x, i);
    return 1.0 - std::pow((A * (v - star)).norm(), alpha) / big_m;
  };
  f.exact_box_min = [max_norm_over, alpha, big_m, p](const TreeSpace& trees, const Box& box) {
    std::vector<DyadicInterval> iv;
    for (int i = 0; i < p; ++i) {
      if (!trees.axis(i).is_dyadic())
        throw UnsupportedError("elliptical minima need dyadic axes");
      iv.push_back(dyadic_interval(box.nodes[static_cast<std::size_t>(i)]));
    }
    return 1.0 - std::pow(max_norm_over(iv), alpha) / big_m;
  };
  return f;
}

RewardFunction make_pathological(PathologicalKind kind) {
  RewardFunction f;
  f.p = 1;
  f.mu_star = 1.0;
  f.maxima = {real_point({0.5})};
  switch (kind) {
    case PathologicalKind::log_peak: {
      f.family = "pathological:log-peak";
      // raw(s) = 1/log(s^2/2) with the removable singularity raw(0) = 0;
      // minimum 1/log(1/2) at |s| = 1.
      double raw_min = 1.0 / std::log(0.5);
      f.eval = [raw_min](const ArmPoint& x) {
        double s = 2.0 * real_coord(x, 0) - 1.0;
        double raw = s == 0.0 ? 0.0 : 1.0 / std::log(0.5 * s * s);
        return (raw - raw_min) / (0.0 - raw_min);
      };
      break;
    }
    case PathologicalKind::exp_flat: {
      f.family = "pathological:exp-flat";
      double raw_min = -std::exp(-1.0);
      f.eval = [raw_min](const ArmPoint& x) {
        double s = 2.0 * real_coord(x, 0) - 1.0;
        double raw = s == 0.0 ? 0.0 : -std::exp(-1.0 / (s * s));
        return (raw - raw_min) / (0.0 - raw_min);
      };
      break;
    }
    case PathologicalKind::mixed_exponent: {
      f.family = "pathological:mixed-exponent";
      // raw(s) = -|s|^(1 + 1(s>0)); both endpoints reach -1.
      f.eval = [](const ArmPoint& x) {
        double s = 2.0 * real_coord(x, 0) - 1.0;
        double raw = s > 0.0 ? -(s * s) : -std::fabs(s);
        return raw + 1.0;
      };
      break;
    }
  }
  return f;
}

NodeId adversarial_node(int i, int j) {
  if (i < 0 || j < 1 || j > (1 << i)) throw ConfigError("invalid adversarial node (i, j)");
  NodeId node;
  for (int bit = i - 1; bit >= 0; --bit) {
    node.path.push_back(static_cast<std::uint32_t>((static_cast<unsigned>(j - 1) >> bit) & 1u));
    node.path.push_back(0);
  }
  return node;
}

int adversarial_level_for(double beta, std::uint64_t horizon) {
  if (beta < 0.0) throw ConfigError("beta must be nonnegative");
  if (beta == 0.0) return 1;
  double target = std::log2(4.0 * static_cast<double>(horizon));
  double rate = 1.0 + 2.0 / beta;
  int l = static_cast<int>(std::ceil(target / rate));
  return std::max(l, 1);
}

RewardFunction make_adversarial(double beta, int level, int arm_index, std::uint64_t horizon,
                                int p) {
  if (beta < 0.0) throw ConfigError("beta must be nonnegative");
  if (level < 1 || level > 20) throw ConfigError("adversarial level must lie in [1, 20]");
  if (arm_index < 1 || arm_index > (1 << level))
    throw ConfigError("adversarial arm index must lie in [1, 2^level]");
  if (p < 1) throw ConfigError("dimension must be >= 1");
  double alpha;
  if (beta == 0.0) {
    if (horizon < 1) throw ConfigError("beta = 0 instances need the horizon");
    alpha = 1.0 / std::sqrt(2.0 * static_cast<double>(horizon));
  } else {
    alpha = std::pow(2.0, -1.0 / beta);
  }

  int l = level;
  int k = arm_index;
  DyadicInterval peak = dyadic_interval(adversarial_node(l, k));

  // Value from the first 2l dyadic bits of x1: the level-i union is the set
  // of points whose bits at odd positions 1, 3, ..., 2i-1 are all 0, and the
  // peak set is the node with interleaved bits of k-1.
  NodePath peak_path = adversarial_node(l, k).path;
  auto value_of = [alpha, l, peak_path](double x1) {
    double sum = 1.0;  // level-0 term: the whole axis
    double x = x1;
    std::vector<std::uint32_t> bits;
    bits.reserve(static_cast<std::size_t>(2 * l));
    for (int m = 0; m < 2 * l; ++m) {
      x *= 2.0;
      std::uint32_t b = x >= 1.0 ? 1u : 0u;
      x -= b;
      bits.push_back(b);
    }
    double weight = alpha;
    for (int i = 1; i < l; ++i) {
      if (bits[static_cast<std::size_t>(2 * i - 1)] != 0) break;
      bool in_union = true;
      for (int m = 1; m <= i; ++m)
        if (bits[static_cast<std::size_t>(2 * m - 1)] != 0) in_union = false;
      if (!in_union) break;
      sum += weight;
      weight *= alpha;
    }
    // the geometric sum above contributes (1-alpha) * sum; the peak adds alpha^l
    double v = (1.0 - alpha) * sum;
    bool in_peak = std::equal(peak_path.begin(), peak_path.end(), bits.begin());
    if (in_peak) v += std::pow(alpha, l);
    return (1.0 + v) / 3.0;
  };

  std::vector<DyadicInterval> unions_flat;  // per level i >= 1, 2^i intervals
  std::vector<std::size_t> level_offset;
  for (int i = 1; i < l; ++i) {
    level_offset.push_back(unions_flat.size());
    for (int j = 1; j <= (1 << i); ++j)
      unions_flat.push_back(dyadic_interval(adversarial_node(i, j)));
  }
  level_offset.push_back(unions_flat.size());

  RewardFunction f;
  f.p = p;
  f.family = "adversarial";
  f.mu_star = 2.0 / 3.0;
  std::vector<double> peak_mid(static_cast<std::size_t>(p), 0.5);
  peak_mid[0] = 0.5 * (peak.lo + peak.hi);
  f.maxima = {real_point(peak_mid)};
  f.eval = [value_of](const ArmPoint& x) { return value_of(real_coord(x, 0)); };

  auto overlap = [](const DyadicInterval& a, const DyadicInterval& b) {
    return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
  };
  f.exact_box_mean = [alpha, l, peak, unions_flat, level_offset, overlap](
                         const TreeSpace& trees, const Box& box) {
    if (!trees.axis(0).is_dyadic())
      throw UnsupportedError("adversarial means need a dyadic first axis");
    DyadicInterval iv = dyadic_interval(box.nodes[0]);
    double len = iv.hi - iv.lo;
    double sum = 1.0;  // level 0 covers everything
    double weight = alpha;
    for (int i = 1; i < l; ++i) {
      double cover = 0.0;
      std::size_t begin = level_offset[static_cast<std::size_t>(i - 1)];
      std::size_t end = level_offset[static_cast<std::size_t>(i)];
      for (std::size_t u = begin; u < end; ++u) cover += overlap(iv, unions_flat[u]);
      sum += weight * cover / len;
      weight *= alpha;
    }
    double v = (1.0 - alpha) * sum + std::pow(alpha, l) * overlap(iv, peak) / len;
    return (1.0 + v) / 3.0;
  };
  f.exact_box_min = [alpha, l, peak, unions_flat, level_offset, overlap](
                        const TreeSpace& trees, const Box& box) {
    if (!trees.axis(0).is_dyadic())
      throw UnsupportedError("adversarial minima need a dyadic first axis");
    DyadicInterval iv = dyadic_interval(box.nodes[0]);
    double len = iv.hi - iv.lo;
    // The minimum sits at the shallowest level whose union fails to cover
    // the node completely.
    for (int i = 1; i < l; ++i) {
      double cover = 0.0;
      std::size_t begin = level_offset[static_cast<std::size_t>(i - 1)];
      std::size_t end = level_offset[static_cast<std::size_t>(i)];
      for (std::size_t u = begin; u < end; ++u) cover += overlap(iv, unions_flat[u]);
      if (cover < len) return (2.0 - std::pow(alpha, i)) / 3.0;
    }
    if (overlap(iv, peak) < len) return (2.0 - std::pow(alpha, l)) / 3.0;
    return 2.0 / 3.0;
  };
  return f;
}

RewardFunction make_constant(int p, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("constant reward must lie in [0,1]");
  RewardFunction f;
  f.p = p;
  f.family = "constant";
  f.mu_star = value;
  f.eval = [value](const ArmPoint&) { return value; };
  f.exact_box_mean = [value](const TreeSpace&, const Box&) { return value; };
  f.exact_box_min = [value](const TreeSpace&, const Box&) { return value; };
  return f;
}

RewardFunction make_custom(int p, std::string family, double mu_star,
                           std::function<double(const ArmPoint&)> eval) {
  RewardFunction f;
  f.p = p;
  f.family = std::move(family);
  f.mu_star = mu_star;
  f.eval = std::move(eval);
  return f;
}

NoiseModel NoiseModel::from_json(const nlohmann::json& j) {
  NoiseModel n;
  std::string kind = j.value("kind", "bernoulli");
  if (kind == "deterministic") {
    n.kind = Kind::deterministic;
  } else if (kind == "bernoulli") {
    n.kind = Kind::bernoulli;
  } else if (kind == "truncated-gaussian") {
    n.kind = Kind::truncated_gaussian;
    n.sigma = j.value("sigma", 0.1);
    if (!(n.sigma > 0.0)) throw ConfigError("truncated-gaussian sigma must be positive");
  } else {
    throw ConfigError("unknown noise kind '" + kind + "'");
  }
  return n;
}

nlohmann::json NoiseModel::to_json() const {
  switch (kind) {
    case Kind::deterministic:
      return {{"kind", "deterministic"}};
    case Kind::bernoulli:
      return {{"kind", "bernoulli"}};
    case Kind::truncated_gaussian:
      return {{"kind", "truncated-gaussian"}, {"sigma", sigma}};
  }
  return {};
}

Environment::Environment(RewardFunction f, NoiseModel noise)
    : f_(std::move(f)), noise_(noise) {
  if (!f_.eval) throw ConfigError("reward function has no evaluator");
  if (f_.family == "adversarial" && noise_.kind != NoiseModel::Kind::bernoulli)
    throw ConfigError("adversarial instances require bernoulli noise");
}

double sample_reward(const RewardFunction& f, const NoiseModel& noise, const ArmPoint& x,
                     Rng& rng) {
  double mu = f.eval(x);
  switch (noise.kind) {
    case NoiseModel::Kind::deterministic:
      return mu;
    case NoiseModel::Kind::bernoulli:
      return rng.bernoulli(mu) ? 1.0 : 0.0;
    case NoiseModel::Kind::truncated_gaussian:
      return std::clamp(mu + noise.sigma * rng.gaussian(), 0.0, 1.0);
  }
  return mu;
}

double Environment::sample_reward(const ArmPoint& x, Rng& rng) const {
  return atb::sample_reward(f_, noise_, x, rng);
}

BoxMean Environment::box_mean(const TreeSpace& trees, const Box& box) const {
  if (f_.exact_box_mean)
    return {f_.exact_box_mean(trees, box), 0.0, BoxMean::Method::closed_form};
  if (all_axes_dyadic(trees) && f_.p <= 3) {
    std::vector<DyadicInterval> iv;
    for (const NodeId& n : box.nodes) iv.push_back(dyadic_interval(n));
    return {quadrature_mean(f_, iv), 0.0, BoxMean::Method::quadrature};
  }
  // pi | B sampling for treed axes or high dimension.
  const std::size_t kSamples = 100000;
  Rng rng(0x9e3779b9u);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t s = 0; s < kSamples; ++s) {
    ArmPoint x;
    x.coords.reserve(box.nodes.size());
    for (std::size_t i = 0; i < box.nodes.size(); ++i)
      x.coords.push_back(trees.sample_in_node(static_cast<int>(i), box.nodes[i], rng));
    double v = f_.eval(x);
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / static_cast<double>(kSamples);
  double var = std::max(0.0, sumsq / static_cast<double>(kSamples) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(kSamples)), BoxMean::Method::monte_carlo};
}

double Environment::delta_badness(const TreeSpace& trees, const Box& box) const {
  if (f_.exact_box_min) return f_.mu_star - f_.exact_box_min(trees, box);
  // Sampled estimate; diagnostics only.
  Rng rng(0x51ed270bu);
  double lowest = kInfinity;
  for (int s = 0; s < 4096; ++s) {
    ArmPoint x;
    x.coords.reserve(box.nodes.size());
    for (std::size_t i = 0; i < box.nodes.size(); ++i)
      x.coords.push_back(trees.sample_in_node(static_cast<int>(i), box.nodes[i], rng));
    lowest = std::min(lowest, f_.eval(x));
  }
  return f_.mu_star - lowest;
}

double Environment::avg_badness(const TreeSpace& trees, const Box& box) const {
  return f_.mu_star - box_mean(trees, box).value;
}

Environment Environment::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("environment spec must be an object");
  std::string family = j.value("family", "");
  NoiseModel noise = j.contains("noise") ? NoiseModel::from_json(j.at("noise")) : NoiseModel{};
  if (family == "power") {
    int p = j.value("p", 1);
    return Environment(make_power(p, j.at("alphas").get<std::vector<double>>(),
                                  j.at("coeffs").get<std::vector<double>>(),
                                  j.at("x_star").get<std::vector<double>>()),
                       noise);
  }
  if (family == "elliptical") {
    int p = j.value("p", 2);
    return Environment(
        make_elliptical(p, j.at("matrix").get<std::vector<std::vector<double>>>(),
                        j.value("alpha", 2.0), j.at("x_star").get<std::vector<double>>()),
        noise);
  }
  if (family == "pathological") {
    std::string kind = j.value("kind", "");
    PathologicalKind k;
    if (kind == "log-peak")
      k = PathologicalKind::log_peak;
    else if (kind == "exp-flat")
      k = PathologicalKind::exp_flat;
    else if (kind == "mixed-exponent")
      k = PathologicalKind::mixed_exponent;
    else
      throw ConfigError("unknown pathological kind '" + kind + "'");
    return Environment(make_pathological(k), noise);
  }
  if (family == "adversarial") {
    return Environment(make_adversarial(j.value("beta", 1.0), j.at("level").get<int>(),
                                        j.at("arm_index").get<int>(),
                                        j.value("horizon", std::uint64_t{0}), j.value("p", 1)),
                       noise);
  }
  if (family == "constant") {
    return Environment(make_constant(j.value("p", 1), j.value("value", 0.5)), noise);
  }
  throw ConfigError("unknown environment family '" + family + "'");
}

nlohmann::json Environment::to_json() const {
  nlohmann::json j{{"family", f_.family}, {"p", f_.p}, {"noise", noise_.to_json()}};
  return j;
}

std::vector<ZoomingProbePoint> zooming_ratio_probe(const RewardFunction& f, double x_star,
                                                   const std::vector<double>& eps_schedule) {
  if (f.p != 1) throw UnsupportedError("the zooming probe is one-dimensional");
  constexpr int kGrid = 401;

  auto ratio_on = [&](double lo, double hi, double eps) -> double {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    double diam = hi - lo;
    if (!(diam > 0.0) || x_star < lo || x_star > hi) return -1.0;  // degenerate, skip
    std::vector<double> xs(kGrid);
    for (int i = 0; i < kGrid; ++i)
      xs[static_cast<std::size_t>(i)] = lo + diam * i / (kGrid - 1);
    xs.push_back(x_star);
    std::vector<double> fx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      fx[i] = f.eval(real_point({xs[i]}));
    double fstar = f.eval(real_point({x_star}));
    double denom = 0.0;
    for (double v : fx) denom = std::max(denom, std::fabs(fstar - v));
    if (denom == 0.0) return 0.0;
    double limit = eps * diam * (1.0 + 1e-9);
    double numer = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i + 1; j < xs.size(); ++j)
        if (std::fabs(xs[i] - xs[j]) <= limit)
          numer = std::max(numer, std::fabs(fx[i] - fx[j]));
    return numer / denom;
  };

  std::vector<ZoomingProbePoint> out;
  for (double eps : eps_schedule) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("probe eps must lie in (0, 1)");
    ZoomingProbePoint pt{eps, 0.0, 0.0};
    // The witness neighbourhood: left arm shrinking quadratically, right arm
    // linear, mapped into the domain around x_star.
    double w = ratio_on(x_star - 0.5 * eps * eps, x_star + 0.5 * (eps - eps * eps), eps);
    double s = ratio_on(x_star - 0.5 * eps, x_star + 0.5 * eps, eps);
    pt.witness_ratio = std::max(w, 0.0);
    pt.max_ratio = std::max({w, s, 0.0});
    out.push_back(pt);
  }
  return out;
}

}  // namespace atb
