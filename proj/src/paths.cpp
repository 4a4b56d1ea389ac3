#include "filtlab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "filtlab/parallel.hpp"

namespace filtlab {

namespace {

void check_paths(std::size_t n_paths) {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
}

}  // namespace

PathBundle simulate_brownian(const TimeGrid& grid, std::size_t n_paths,
                             std::uint64_t seed, unsigned workers) {
    check_paths(n_paths);
    PathBundle bundle(grid, n_paths, seed);
    auto& terminal = bundle.aux["terminal"];
    terminal.assign(n_paths, 0.0);
    const std::size_t m = grid.size();
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            double x = 0.0;
            bundle.value(p, 0) = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                x += std::sqrt(grid.step(i)) * rng.normal();
                bundle.value(p, i + 1) = x;
            }
            terminal[p] = x;
        }
    });
    return bundle;
}

PathBundle simulate_poisson(double rate, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed, unsigned workers) {
    if (!(rate > 0.0)) throw std::invalid_argument("simulate_poisson: rate must be positive");
    check_paths(n_paths);
    PathBundle bundle(grid, n_paths, seed);
    bundle.jump_times.resize(n_paths);
    auto& terminal = bundle.aux["terminal"];
    terminal.assign(n_paths, 0.0);
    const double horizon = grid.horizon();
    const std::size_t m = grid.size();
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            std::vector<double>& jumps = bundle.jump_times[p];
            double t = rng.exponential(rate);
            while (t <= horizon) {
                jumps.push_back(t);
                t += rng.exponential(rate);
            }
            std::size_t j = 0;
            for (std::size_t i = 0; i < m; ++i) {
                while (j < jumps.size() && jumps[j] <= grid[i]) ++j;
                bundle.value(p, i) = static_cast<double>(j);
            }
            terminal[p] = static_cast<double>(jumps.size());
        }
    });
    return bundle;
}

PathBundle simulate_poisson_until_nth_jump(double rate, const TimeGrid& grid,
                                           long long jump_index, std::size_t n_paths,
                                           std::uint64_t seed, unsigned workers) {
    if (!(rate > 0.0)) throw std::invalid_argument("simulate_poisson: rate must be positive");
    if (jump_index < 1) throw std::invalid_argument("jump_index must be at least 1");
    check_paths(n_paths);
    PathBundle bundle(grid, n_paths, seed);
    bundle.jump_times.resize(n_paths);
    auto& terminal = bundle.aux["terminal"];
    auto& nth = bundle.aux["T_n"];
    terminal.assign(n_paths, 0.0);
    nth.assign(n_paths, 0.0);
    const double horizon = grid.horizon();
    const std::size_t m = grid.size();
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            std::vector<double>& jumps = bundle.jump_times[p];
            double t = 0.0;
            long long count = 0;
            while (true) {
                t += rng.exponential(rate);
                ++count;
                if (t <= horizon) jumps.push_back(t);
                if (count == jump_index) nth[p] = t;
                if (count >= jump_index && t > horizon) break;
            }
            std::size_t j = 0;
            for (std::size_t i = 0; i < m; ++i) {
                while (j < jumps.size() && jumps[j] <= grid[i]) ++j;
                bundle.value(p, i) = static_cast<double>(j);
            }
            terminal[p] = static_cast<double>(jumps.size());
        }
    });
    return bundle;
}

std::vector<double> sample_hitting_time_unit(std::size_t n, std::uint64_t seed,
                                             unsigned workers) {
    check_paths(n);
    std::vector<double> taus(n);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            const double z = rng.normal();
            taus[p] = 1.0 / (z * z);
        }
    });
    return taus;
}

PathBundle simulate_levy(const LevyModel& model, const TimeGrid& grid,
                         std::size_t n_paths, std::uint64_t seed, unsigned workers) {
    using Kind = LevyModel::Kind;
    if (model.kind == Kind::Poisson || model.kind == Kind::CompoundPoisson) {
        PathBundle counts = simulate_poisson(model.rate, grid, n_paths, seed, workers);
        if (model.kind == Kind::Poisson) return counts;
        // Replace unit jumps by sampled sizes; one extra stream channel keyed
        // off the path id keeps jump epochs and sizes decoupled.
        const std::size_t m = grid.size();
        auto& cp_terminal = counts.aux["terminal"];
        parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                PhiloxStream rng(seed ^ 0x9E3779B97F4A7C15ull, p);
                const auto& jumps = counts.jump_times[p];
                std::vector<double> sizes(jumps.size());
                for (auto& s : sizes) {
                    s = model.jump_law.kind == JumpLaw::Kind::Normal
                            ? model.jump_law.mu + model.jump_law.sigma * rng.normal()
                            : model.jump_law.c;
                }
                std::size_t j = 0;
                double x = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    while (j < jumps.size() && jumps[j] <= grid[i]) x += sizes[j++];
                    counts.value(p, i) = x;
                }
                cp_terminal[p] = x;
            }
        });
        return counts;
    }
    PathBundle bundle = simulate_brownian(grid, n_paths, seed, workers);
    if (model.kind == Kind::BrownianWithDrift && model.drift != 0.0) {
        const std::size_t m = grid.size();
        for (std::size_t p = 0; p < n_paths; ++p) {
            for (std::size_t i = 0; i < m; ++i)
                bundle.value(p, i) += model.drift * grid[i];
            bundle.aux["terminal"][p] = bundle.value(p, m - 1);
        }
    }
    return bundle;
}

PathBundle simulate_sde_euler(const EulerSpec& spec, const TimeGrid& grid,
                              std::size_t n_paths, std::uint64_t seed,
                              unsigned workers) {
    check_paths(n_paths);
    if (!(spec.drift_clip > 0.0))
        throw std::invalid_argument("simulate_sde_euler: drift_clip must be positive");
    if (!spec.drift || !spec.diffusion)
        throw std::invalid_argument("simulate_sde_euler: drift and diffusion are required");
    PathBundle bundle(grid, n_paths, seed);
    auto& aux_l = bundle.aux["L"];
    auto& terminal = bundle.aux["terminal"];
    aux_l.assign(n_paths, 0.0);
    terminal.assign(n_paths, 0.0);
    std::vector<std::uint32_t> clamps(n_paths, 0);
    const std::size_t m = grid.size();
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            const double aux = spec.aux_sampler ? spec.aux_sampler(rng) : 0.0;
            aux_l[p] = aux;
            double x = spec.x0;
            bundle.value(p, 0) = x;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                const double t = grid[i];
                double mu = spec.drift(t, x, aux);
                const double sig = spec.diffusion(t, x);
                if (!std::isfinite(mu))
                    throw std::runtime_error(
                        "simulate_sde_euler: non-finite drift at node " + std::to_string(i));
                if (!std::isfinite(sig))
                    throw std::runtime_error(
                        "simulate_sde_euler: non-finite diffusion at node " + std::to_string(i));
                if (mu > spec.drift_clip) {
                    mu = spec.drift_clip;
                    ++clamps[p];
                } else if (mu < -spec.drift_clip) {
                    mu = -spec.drift_clip;
                    ++clamps[p];
                }
                const double h = grid.step(i);
                x += mu * h + sig * std::sqrt(h) * rng.normal();
                bundle.value(p, i + 1) = x;
            }
            terminal[p] = x;
        }
    });
    std::size_t total = 0;
    for (std::uint32_t c : clamps) total += c;
    bundle.drift_clamp_events = total;
    return bundle;
}

}  // namespace filtlab
