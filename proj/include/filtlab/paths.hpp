#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "filtlab/levy.hpp"
#include "filtlab/path_bundle.hpp"
#include "filtlab/rng.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

// Standard Brownian motion sampled by exact normal increments.
// aux: "terminal" = B_T.
PathBundle simulate_brownian(const TimeGrid& grid, std::size_t n_paths,
                             std::uint64_t seed, unsigned workers = 0);

// Poisson process with exact exponential jump gaps truncated at the grid
// horizon; values at grid nodes are counts. aux: "terminal" = N_T.
PathBundle simulate_poisson(double rate, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed, unsigned workers = 0);

// Same, but each path keeps drawing gaps until its n-th jump so that T_n is
// exact even when it falls beyond the horizon. jump_times keeps only the
// jumps inside (0, T]; aux: "terminal" = N_T, "T_n" = n-th jump epoch.
PathBundle simulate_poisson_until_nth_jump(double rate, const TimeGrid& grid,
                                           long long jump_index, std::size_t n_paths,
                                           std::uint64_t seed, unsigned workers = 0);

// First hitting time of level -1 by standard Brownian motion, sampled by the
// inverse construction tau = 1/Z^2; the CDF is 2*Phi(-1/sqrt(t)).
std::vector<double> sample_hitting_time_unit(std::size_t n, std::uint64_t seed,
                                             unsigned workers = 0);

// Levy path sampler for the characteristic-function tests and the structural
// model: Brownian (with drift) by exact increments, (compound) Poisson by
// exact jumps.
PathBundle simulate_levy(const LevyModel& model, const TimeGrid& grid,
                         std::size_t n_paths, std::uint64_t seed, unsigned workers = 0);

struct EulerSpec {
    // drift(t, x, aux) with aux the per-path revealed scalar.
    std::function<double(double, double, double)> drift;
    std::function<double(double, double)> diffusion;
    // Optional per-path draw made before the path starts (e.g. the revealed
    // terminal value); stored as aux "L". Defaults to 0.
    std::function<double(PhiloxStream&)> aux_sampler;
    double x0 = 0.0;
    double drift_clip = 1e4;
};

// Explicit Euler-Maruyama on the given grid. Drift is evaluated at left
// endpoints only, so a drift singular exactly at the final node never gets
// evaluated there; per-step drift magnitudes are clamped at drift_clip and
// clamping events are counted in the bundle. Non-finite drift or diffusion
// raises std::runtime_error naming the node.
PathBundle simulate_sde_euler(const EulerSpec& spec, const TimeGrid& grid,
                              std::size_t n_paths, std::uint64_t seed,
                              unsigned workers = 0);

}  // namespace filtlab
