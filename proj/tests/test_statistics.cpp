#include <doctest.h>

#include <cmath>

#include "atb/statistics.hpp"

using namespace atb;

namespace {

// Paper-literal constants: both scale knobs at 1.
EngineConstants literal(double eps, double gamma, int p, int q) {
  return EngineConstants::make(eps, gamma, p, q, 1.0, 1.0);
}

CellStats stats_with(std::uint64_t hits, double mean) {
  CellStats s;
  for (std::uint64_t i = 0; i < hits; ++i) s.add(mean);
  return s;
}

}  // namespace

TEST_CASE("derived constants follow their formulas exactly") {
  EngineConstants c = literal(0.5, 0.5, 1, 2);
  CHECK(c.tau == 8.0);
  CHECK(c.nu == 16.0);
  CHECK(c.index_multiplier() == 33.0);
  EngineConstants d = literal(0.1, 0.125, 3, 4);
  CHECK(d.tau == 40.0);
  CHECK(d.nu == doctest::Approx(8.0 * std::sqrt(16.0)).epsilon(1e-15));
}

TEST_CASE("invalid constants are rejected") {
  CHECK_THROWS_AS(EngineConstants::make(0.0, 0.5, 1, 2), ConfigError);
  CHECK_THROWS_AS(EngineConstants::make(0.5, 1.0, 1, 2), ConfigError);
  CHECK_THROWS_AS(EngineConstants::make(0.5, 0.5, 0, 2), ConfigError);
  CHECK_THROWS_AS(EngineConstants::make(0.5, 0.5, 1, 1), ConfigError);
}

TEST_CASE("confidence radius matches hand evaluation") {
  CHECK(confidence_radius(0, std::log(2.0), 8.0) == kInfinity);
  // epsilon = 0.5 -> tau = 8; rho = 2, n = 1: 2 sqrt(ln 18)
  double r1 = confidence_radius(1, std::log(2.0), 8.0);
  CHECK(r1 == doctest::Approx(2.0 * std::sqrt(std::log(18.0))).epsilon(1e-15));
  // strictly decreasing in n
  double r2 = confidence_radius(2, std::log(2.0), 8.0);
  double r100 = confidence_radius(100, std::log(2.0), 8.0);
  CHECK(r1 > r2);
  CHECK(r2 > r100);
}

TEST_CASE("confidence radius vanishes at large n") {
  // rho <= 2^40, tau <= 1e3, n = 1e6
  double r = confidence_radius(1000000, 40.0 * std::log(2.0), 1000.0);
  CHECK(r < 0.02);
  CHECK(r > 0.0);
}

TEST_CASE("mean bounds are the mean plus/minus the radius, unclipped") {
  auto [lo1, hi1] = mean_bounds(stats_with(4, 0.5), 0.1);
  CHECK(lo1 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(hi1 == doctest::Approx(0.6).epsilon(1e-15));

  auto [lo2, hi2] = mean_bounds(stats_with(3, 1.0), 0.0);
  CHECK(lo2 == 1.0);
  CHECK(hi2 == 1.0);

  auto [lo3, hi3] = mean_bounds(stats_with(2, 0.25), 3.4);
  CHECK(lo3 == doctest::Approx(-3.15).epsilon(1e-12));
  CHECK(hi3 == doctest::Approx(3.65).epsilon(1e-12));

  CellStats unhit;
  CHECK_THROWS_AS(mean_bounds(unhit, 0.1), ContractViolation);
}

TEST_CASE("index is mean plus the optimism multiple of the radius") {
  EngineConstants c = literal(0.5, 0.5, 1, 2);  // nu = 16, multiplier 33
  CellStats unhit;
  CHECK(index_value(unhit, kInfinity, c) == kInfinity);
  CHECK(index_value(stats_with(5, 0.5), 0.1, c) == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(index_value(stats_with(5, 0.37), 0.0, c) == doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("index is monotone in mean and radius, argmax shift-invariant") {
  EngineConstants c = literal(0.2, 0.25, 2, 2);
  CHECK(index_value(stats_with(3, 0.6), 0.1, c) > index_value(stats_with(3, 0.5), 0.1, c));
  CHECK(index_value(stats_with(3, 0.5), 0.2, c) > index_value(stats_with(3, 0.5), 0.1, c));

  std::vector<double> means{0.1, 0.4, 0.3};
  std::vector<double> radii{0.2, 0.05, 0.1};
  auto argmax = [&](double shift) {
    std::size_t best = 0;
    double bestv = -kInfinity;
    for (std::size_t i = 0; i < means.size(); ++i) {
      double iv = index_value(stats_with(2, means[i] + shift), radii[i], c);
      if (iv > bestv) {
        bestv = iv;
        best = i;
      }
    }
    return best;
  };
  CHECK(argmax(0.0) == argmax(0.17));
}

TEST_CASE("compensated mean stays exact over a million updates") {
  CellStats s;
  for (int i = 0; i < 1000000; ++i) s.add(0.1);
  CHECK(std::fabs(s.mean() - 0.1) < 1e-12);
}

TEST_CASE("width estimate finds the separating pair") {
  // p=1 cells in canonical order: [B, left half, right half]
  std::vector<CellStats> cells{stats_with(200, 0.5), stats_with(100, 0.25),
                               stats_with(100, 0.75)};
  std::vector<double> radii{0.03, 0.05, 0.05};
  std::vector<PairIdx> pairs{{1, 2, 0}, {2, 1, 0}, {0, 1, 0}, {1, 0, 0}, {0, 2, 0}, {2, 0, 0}};
  WidthEstimate w = width_estimate(pairs, cells, radii);
  CHECK(w.value == doctest::Approx(0.40).epsilon(1e-12));  // (0.75-0.05) - (0.25+0.05)
  CHECK(w.axis == 0);
  CHECK(pairs[w.pair_index].first == 2);
  CHECK(pairs[w.pair_index].second == 1);
}

TEST_CASE("width estimate with constant rewards is negative") {
  std::vector<CellStats> cells{stats_with(50, 0.4), stats_with(25, 0.4), stats_with(25, 0.4)};
  std::vector<double> radii{0.1, 0.15, 0.15};
  std::vector<PairIdx> pairs{{1, 2, 0}, {2, 1, 0}};
  WidthEstimate w = width_estimate(pairs, cells, radii);
  CHECK(w.value < 0.0);
  CHECK(w.has_argmax());
}

TEST_CASE("width estimate without eligible pairs is minus infinity") {
  std::vector<CellStats> cells{stats_with(10, 0.5)};
  std::vector<double> radii{0.1};
  WidthEstimate none = width_estimate({}, cells, radii);
  CHECK(none.value == -kInfinity);
  CHECK_FALSE(none.has_argmax());

  // pairs exist but a side is unhit
  std::vector<CellStats> cells2{stats_with(10, 0.5), CellStats{}};
  std::vector<double> radii2{0.1, kInfinity};
  std::vector<PairIdx> pairs2{{0, 1, 0}, {1, 0, 0}};
  WidthEstimate w2 = width_estimate(pairs2, cells2, radii2);
  CHECK(w2.value == -kInfinity);
  CHECK_FALSE(w2.has_argmax());
}

TEST_CASE("width estimate tie-break is reproducible") {
  std::vector<CellStats> cells{stats_with(10, 0.5), stats_with(10, 0.5)};
  std::vector<double> radii{0.1, 0.1};
  std::vector<PairIdx> pairs{{0, 1, 0}, {1, 0, 1}};
  // identical values: the first pair in canonical order wins
  WidthEstimate a = width_estimate(pairs, cells, radii);
  WidthEstimate b = width_estimate(pairs, cells, radii);
  CHECK(a.pair_index == 0);
  CHECK(a.axis == 0);
  CHECK(b.pair_index == a.pair_index);
}

TEST_CASE("scaled radius shrinks the literal radius by the scale factor") {
  EngineConstants c = EngineConstants::make(0.5, 0.5, 1, 2, 0.25, 1.0);
  double literal_r = confidence_radius(10, std::log(2.0), c.tau);
  CHECK(c.radius(10, std::log(2.0)) == doctest::Approx(0.25 * literal_r).epsilon(1e-15));
  CHECK(c.radius(0, std::log(2.0)) == kInfinity);
}
