#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace filtlab {

enum class Refinement { Uniform, GeometricTowardEnd };

// Strictly increasing discretization of [0, T]. The geometric mode shrinks
// steps toward T by a fixed ratio per step, which is how singular bridge
// drifts (1/(T-t), 1/(tau-t)) are kept under control.
class TimeGrid {
public:
    static TimeGrid uniform(double horizon, std::size_t n_steps);
    // Step sizes form a geometric sequence h, h*ratio, h*ratio^2, ...
    // toward the endpoint; ratio must lie in (0,1).
    static TimeGrid geometric(double horizon, std::size_t n_steps, double ratio);
    static TimeGrid from_points(std::vector<double> points);

    double horizon() const { return points_.back(); }
    std::size_t n_steps() const { return points_.size() - 1; }
    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double step(std::size_t i) const { return points_[i + 1] - points_[i]; }
    const std::vector<double>& points() const { return points_; }

    // Index of an exact grid time; throws invalid_argument if t is not a node.
    std::size_t index_of(double t) const;
    bool contains(double t) const;

    // Sorted union of this grid's nodes and extra times in [0, horizon].
    TimeGrid merged_with(std::span<const double> extra) const;

    std::string summary() const { return summary_; }

private:
    explicit TimeGrid(std::vector<double> points, std::string summary);

    std::vector<double> points_;
    std::string summary_;
};

// Grid factory used by the CLI; validates T > 0, n_steps >= 2 and, for the
// geometric mode, ratio in (0,1).
TimeGrid make_grid(double horizon, std::size_t n_steps, Refinement refinement,
                   double ratio = 0.5);

// Ratio giving last_step/first_step == shrink for an n-step geometric grid.
// The default shrink keeps the final step inside the zone the default drift
// clip can still track (the terminal gap scales like sqrt(shrink/n_steps)).
double geometric_ratio_for(std::size_t n_steps, double shrink = 1e-4);

}  // namespace filtlab
