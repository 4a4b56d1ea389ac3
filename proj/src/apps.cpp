#include "filtlab/apps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "filtlab/parallel.hpp"
#include "filtlab/rng.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_structural(const StructuralModel& model) {
    if (!(model.initial_value > 0.0))
        throw std::invalid_argument("StructuralModel: initial value must be positive");
    if (!(model.barrier > 0.0))
        throw std::invalid_argument("StructuralModel: barrier must be positive");
    if (!(model.barrier < model.initial_value))
        throw std::invalid_argument("StructuralModel: barrier K must lie below V_0");
    if (!(model.vol_sigma >= 0.0))
        throw std::invalid_argument("StructuralModel: volatility must be nonnegative");
    if (model.jumps && !(model.jumps->rate > 0.0))
        throw std::invalid_argument("StructuralModel: jump rate must be positive");
}

}  // namespace

StructuralResult structural_default_simulate(const StructuralModel& model,
                                             const TimeGrid& grid,
                                             std::size_t n_paths, std::uint64_t seed,
                                             unsigned workers) {
    validate_structural(model);
    if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");

    const double log_barrier = std::log(model.barrier) - std::log(model.initial_value);
    const std::size_t m = grid.size();
    std::vector<double> taus(n_paths, kInf);

    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> jump_epochs, jump_sizes;
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            jump_epochs.clear();
            jump_sizes.clear();
            if (model.jumps) {
                double t = rng.exponential(model.jumps->rate);
                while (t <= grid.horizon()) {
                    jump_epochs.push_back(t);
                    t += rng.exponential(model.jumps->rate);
                }
                for (std::size_t j = 0; j < jump_epochs.size(); ++j) {
                    jump_sizes.push_back(model.jumps->law.kind == JumpLaw::Kind::Normal
                                             ? model.jumps->law.mu +
                                                   model.jumps->law.sigma * rng.normal()
                                             : model.jumps->law.c);
                }
            }
            double x = 0.0;  // log V_t - log V_0
            double jump_sum = 0.0;
            std::size_t j = 0;
            for (std::size_t i = 0; i < m; ++i) {
                if (i > 0) {
                    const double h = grid.step(i - 1);
                    x += model.drift_mu * h + model.vol_sigma * std::sqrt(h) * rng.normal();
                }
                while (j < jump_epochs.size() && jump_epochs[j] <= grid[i])
                    jump_sum += jump_sizes[j++];
                if (x + jump_sum < log_barrier) {
                    taus[p] = grid[i];
                    break;
                }
            }
        }
    });

    StructuralResult out;
    out.n_paths = n_paths;
    out.seed = seed;
    out.grid_summary = grid.summary();
    const auto cdf = default_prob_curve(taus, grid);
    out.survival.reserve(cdf.size());
    for (const auto& pt : cdf)
        out.survival.push_back({pt.t, 1.0 - pt.estimate, pt.band});
    out.default_times = std::move(taus);
    return out;
}

std::vector<CurvePoint> default_prob_curve(std::span<const double> default_times,
                                           const TimeGrid& grid) {
    std::vector<double> sorted(default_times.begin(), default_times.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<CurvePoint> curve(grid.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        while (k < sorted.size() && sorted[k] <= grid[i]) ++k;
        const double p = sorted.empty() ? 0.0 : static_cast<double>(k) / n;
        const double band =
            sorted.empty() ? 0.0 : 4.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
        curve[i] = {grid[i], p, band};
    }
    return curve;
}

KyleBackVariant parse_kyle_back_variant(const std::string& label) {
    if (label == "g4-consistent" || label == "g4_consistent")
        return KyleBackVariant::G4Consistent;
    if (label == "as-printed" || label == "as_printed")
        return KyleBackVariant::AsPrinted;
    throw std::invalid_argument("unknown drift_variant '" + label + "'");
}

namespace {

// Per-path integration grid: output nodes merged with a geometric grid
// shrinking toward tau, all truncated at tau ^ 1. Returns sorted times
// starting at 0 and ending exactly at min(tau, 1).
void build_kb_grid(const std::vector<double>& output, double tau, double t_end,
                   std::size_t bridge_steps, double ratio,
                   std::vector<double>& out) {
    out.clear();
    const double tol = 1e-12;
    // geometric nodes toward tau, kept while <= t_end
    std::vector<double> geo;
    geo.reserve(bridge_steps);
    const double first =
        tau * (1.0 - ratio) / (1.0 - std::pow(ratio, static_cast<double>(bridge_steps)));
    double t = 0.0;
    double h = first;
    for (std::size_t i = 0; i + 1 < bridge_steps; ++i) {
        t += h;
        h *= ratio;
        if (t >= t_end - tol) break;
        geo.push_back(t);
    }
    // merge with output nodes strictly inside (0, t_end)
    std::size_t a = 0, b = 0;
    out.push_back(0.0);
    auto push = [&](double v) {
        if (v - out.back() > tol) out.push_back(v);
    };
    while (a < output.size() || b < geo.size()) {
        double next;
        if (a < output.size() && (b >= geo.size() || output[a] <= geo[b]))
            next = output[a++];
        else
            next = geo[b++];
        if (next <= tol || next >= t_end - tol) continue;
        push(next);
    }
    push(t_end);
    if (out.back() != t_end) out.back() = t_end;
}

}  // namespace

KyleBackResult kyle_back_simulate(const KyleBackConfig& config) {
    const TimeGrid& grid = config.output_grid;
    if (std::abs(grid.horizon() - 1.0) > 1e-12)
        throw std::invalid_argument("kyle_back_simulate: horizon is fixed at 1");
    if (config.n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
    if (config.bridge_steps < 2)
        throw std::invalid_argument("kyle_back_simulate: bridge_steps must be at least 2");
    if (!(config.drift_clip > 0.0))
        throw std::invalid_argument("kyle_back_simulate: drift_clip must be positive");

    KyleBackResult result{PathBundle(grid, config.n_paths, config.seed), 0};
    PathBundle& bundle = result.orders;
    auto& tau_aux = bundle.aux["tau"];
    auto& hit_aux = bundle.aux["hit_time"];
    auto& pre_aux = bundle.aux["pre_default_value"];
    auto& def_aux = bundle.aux["defaulted"];
    tau_aux.assign(config.n_paths, 0.0);
    hit_aux.assign(config.n_paths, kInf);
    pre_aux.assign(config.n_paths, std::numeric_limits<double>::quiet_NaN());
    def_aux.assign(config.n_paths, 0.0);

    const double ratio = geometric_ratio_for(config.bridge_steps);
    const std::vector<double>& output = grid.points();
    const bool g4 = config.variant == KyleBackVariant::G4Consistent;
    std::vector<std::uint32_t> clamps(config.n_paths, 0);

    parallel_for(config.n_paths, config.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> times;
        times.reserve(config.bridge_steps + output.size());
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(config.seed, p);
            const double draw = rng.normal();
            const double tau = 1.0 / (draw * draw);
            const bool defaulted = tau <= 1.0;
            const double t_end = defaulted ? tau : 1.0;
            tau_aux[p] = tau;
            def_aux[p] = defaulted ? 1.0 : 0.0;

            build_kb_grid(output, tau, t_end, config.bridge_steps, ratio, times);

            // Before tau the G4 drift is integrated in squared-distance
            // coordinates Z = (1+R)^2, dZ = (3 - 2Z/(tau-t)) dt + 2 sqrt(Z) dbeta,
            // whose Euler recursion cannot tunnel through the barrier. The
            // as-printed variant keeps the literal display in R-coordinates.
            double x = 0.0;       // order level (as-printed, and after absorption)
            double z = 1.0;       // (1 + R)^2 (g4 variant before tau)
            double hit = kInf;
            double pre_default = 0.0;
            std::size_t rec = 0;  // next output node to record
            const double tol = 1e-12;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const double t = times[i];
                const double level = g4 ? std::sqrt(z) - 1.0 : x;
                if (!std::isfinite(level))
                    throw std::runtime_error(
                        "kyle_back_simulate: numeric failure near absorption on path " +
                        std::to_string(p));
                while (rec < output.size() && output[rec] <= t + tol) {
                    bundle.value(p, rec) = level;
                    ++rec;
                }
                if (hit == kInf && level <= -1.0) hit = t;
                if (i + 1 == times.size()) break;
                if (defaulted && times[i + 1] >= tau - tol) pre_default = level;

                const double h = times[i + 1] - t;
                if (g4) {
                    double mu = 3.0 - 2.0 * z / (tau - t);
                    if (mu > config.drift_clip) {
                        mu = config.drift_clip;
                        ++clamps[p];
                    } else if (mu < -config.drift_clip) {
                        mu = -config.drift_clip;
                        ++clamps[p];
                    }
                    z += mu * h + 2.0 * std::sqrt(z * h) * rng.normal();
                    if (z < 0.0) z = -z;
                } else {
                    double mu = 0.0;
                    if (tau <= t) {
                        double w = 1.0 + x;
                        if (std::abs(w) < 1e-12) w = w < 0.0 ? -1e-12 : 1e-12;
                        const double den = tau - t;
                        mu = den != 0.0 ? 1.0 / w - (1.0 - x) / den : 0.0;
                    }
                    if (mu > config.drift_clip) {
                        mu = config.drift_clip;
                        ++clamps[p];
                    } else if (mu < -config.drift_clip) {
                        mu = -config.drift_clip;
                        ++clamps[p];
                    }
                    x += mu * h + std::sqrt(h) * rng.normal();
                }
            }
            if (g4) x = std::sqrt(z) - 1.0;
            // x now sits at t_end. For a defaulted path under the G4 variant the
            // insider drift dies at tau and the noise-trader flow keeps going.
            if (defaulted) {
                pre_aux[p] = pre_default;
                if (g4 && hit == kInf) hit = tau;
                double t_prev = t_end;
                while (rec < output.size()) {
                    const double t_next = output[rec];
                    x += std::sqrt(t_next - t_prev) * rng.normal();
                    bundle.value(p, rec) = x;
                    if (hit == kInf && x <= -1.0) hit = t_next;
                    t_prev = t_next;
                    ++rec;
                }
            } else {
                while (rec < output.size()) {
                    bundle.value(p, rec) = x;
                    ++rec;
                }
            }
            hit_aux[p] = hit;
        }
    });

    std::size_t total = 0;
    for (std::uint32_t c : clamps) total += c;
    result.drift_clamp_events = total;
    return result;
}

}  // namespace filtlab
