#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filtlab/levy.hpp"
#include "filtlab/path_bundle.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

struct CompoundJumps {
    double rate = 1.0;
    JumpLaw law;
};

// Structural credit model: firm value V_t = exp(L_t) with L a Levy process,
// default at the first grid time the value sits below the barrier.
struct StructuralModel {
    double drift_mu = 0.0;
    double vol_sigma = 1.0;
    std::optional<CompoundJumps> jumps;
    double barrier = 0.5;        // K, must satisfy K < initial_value
    double initial_value = 1.0;  // V_0 > 0
};

struct CurvePoint {
    double t = 0.0;
    double estimate = 0.0;
    double band = 0.0;  // CLT half-width (4 sigma)
};

struct StructuralResult {
    std::vector<double> default_times;  // +infinity when the barrier is never crossed
    std::vector<CurvePoint> survival;   // P{tau > t} pointwise on the grid
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string grid_summary;
};

// Discrete barrier monitoring: tau is the first grid node with V < K (no
// continuity correction; the downward bias in the default probability
// shrinks under grid refinement).
StructuralResult structural_default_simulate(const StructuralModel& model,
                                             const TimeGrid& grid,
                                             std::size_t n_paths, std::uint64_t seed,
                                             unsigned workers = 0);

// Monotone default CDF on the grid with CLT bands.
std::vector<CurvePoint> default_prob_curve(std::span<const double> default_times,
                                           const TimeGrid& grid);

// Which drift goes into the equilibrium total-order SDE. The literature's
// printed display activates the drift after default and carries a (1-R)
// numerator; the hitting-time decomposition of the driver activates it
// before default with (1+R). Only the latter carries a correctness claim;
// the former is reproduced verbatim for comparison.
enum class KyleBackVariant { G4Consistent, AsPrinted };

KyleBackVariant parse_kyle_back_variant(const std::string& label);

struct KyleBackConfig {
    TimeGrid output_grid = TimeGrid::uniform(1.0, 512);  // horizon fixed at 1
    std::size_t bridge_steps = 4096;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    KyleBackVariant variant = KyleBackVariant::G4Consistent;
    double drift_clip = 1e4;
    unsigned workers = 0;
};

// Equilibrium total order R*. Per path: tau is sampled exactly; under
// G4Consistent the insider drift 1/(1+R) - (1+R)/(tau-t) acts on [0, tau^1)
// on a per-path grid refined toward tau, R reaches -1 at tau <= 1, and the
// order flow continues as a driftless Brownian motion afterwards. aux:
// "tau", "hit_time" (first grid time with R <= -1, +inf if none),
// "pre_default_value" (R at the last node strictly before tau; NaN for
// tau > 1), "defaulted" (indicator of tau <= 1).
struct KyleBackResult {
    PathBundle orders;
    std::size_t drift_clamp_events = 0;
};

KyleBackResult kyle_back_simulate(const KyleBackConfig& config);

}  // namespace filtlab
