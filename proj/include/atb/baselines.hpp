#pragma once

#include <cstdint>
#include <vector>

#include "atb/environment.hpp"
#include "atb/run_record.hpp"

namespace atb {

// K = ceil(T^(1/3)), the fixed-discretisation grid size with the known
// optimal scaling.
int choose_grid_size(std::uint64_t horizon);

// Centers of an equal grid on [0,1]^p. For p = 1 this is exactly K arms;
// otherwise ceil(K^(1/p)) cells per axis.
std::vector<ArmPoint> grid_centers(int p, int k);

// mu* minus the best grid center: the approximation part of the regret.
double discretisation_regret(const Environment& env, int k);

// Classic UCB1 (mean + sqrt(2 ln t / n)) over the K grid centers; regret is
// measured against the continuum mu*. The radius column carries the
// exploration bonus of the pulled arm.
RunRecord ucb1_run(const Environment& env, int k, std::uint64_t horizon, Rng& rng);

// Arms uniform on [0,1]^p; the sanity floor.
RunRecord uniform_random_run(const Environment& env, std::uint64_t horizon, Rng& rng);

}  // namespace atb
