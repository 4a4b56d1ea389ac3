#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "filtlab/time_grid.hpp"

namespace filtlab {

// Simulated paths aligned to a grid, plus per-path scalars (the revealed
// variable L, a default time, a terminal count, ...) and, for counting
// processes, the exact jump epochs. Immutable once built; safe to share
// read-only across threads.
struct PathBundle {
    PathBundle(TimeGrid g, std::size_t paths, std::uint64_t seed_value)
        : grid(std::move(g)),
          n_paths(paths),
          seed(seed_value),
          values(paths * grid.size(), 0.0) {}

    TimeGrid grid;
    std::size_t n_paths;
    std::uint64_t seed;
    std::vector<double> values;                     // row-major [path][node]
    std::vector<std::vector<double>> jump_times;    // empty unless a counting process
    std::map<std::string, std::vector<double>> aux; // per-path named scalars
    std::size_t drift_clamp_events = 0;

    double value(std::size_t path, std::size_t node) const {
        return values[path * grid.size() + node];
    }
    double& value(std::size_t path, std::size_t node) {
        return values[path * grid.size() + node];
    }
    std::span<const double> path(std::size_t p) const {
        return {values.data() + p * grid.size(), grid.size()};
    }

    const std::vector<double>& aux_values(const std::string& name) const {
        auto it = aux.find(name);
        if (it == aux.end())
            throw std::invalid_argument("PathBundle: missing aux '" + name + "'");
        return it->second;
    }
    bool has_aux(const std::string& name) const { return aux.count(name) != 0; }
};

}  // namespace filtlab
