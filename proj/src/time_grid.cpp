#include "filtlab/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace filtlab {

namespace {

std::string describe(const char* kind, double horizon, std::size_t n_steps) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s[0,%g]x%zu", kind, horizon, n_steps);
    return buf;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> points, std::string summary)
    : points_(std::move(points)), summary_(std::move(summary)) {}

TimeGrid TimeGrid::uniform(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (n_steps < 2) throw std::invalid_argument("TimeGrid: n_steps must be at least 2");
    std::vector<double> pts(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
        pts[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    pts.back() = horizon;
    return TimeGrid(std::move(pts), describe("uniform", horizon, n_steps));
}

TimeGrid TimeGrid::geometric(double horizon, std::size_t n_steps, double ratio) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (n_steps < 2) throw std::invalid_argument("TimeGrid: n_steps must be at least 2");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("TimeGrid: geometric ratio must lie in (0,1)");
    // First step from the geometric series sum h*(1-ratio^n)/(1-ratio) = T.
    const double n = static_cast<double>(n_steps);
    const double first = horizon * (1.0 - ratio) / (1.0 - std::pow(ratio, n));
    std::vector<double> pts(n_steps + 1);
    pts[0] = 0.0;
    double h = first;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        pts[i] = pts[i - 1] + h;
        h *= ratio;
    }
    pts.back() = horizon;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "geometric(%.6g)[0,%g]x%zu", ratio, horizon, n_steps);
    return TimeGrid(std::move(pts), buf);
}

TimeGrid TimeGrid::from_points(std::vector<double> points) {
    if (points.size() < 2) throw std::invalid_argument("TimeGrid: need at least two points");
    if (points.front() != 0.0) throw std::invalid_argument("TimeGrid: first point must be 0");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1]))
            throw std::invalid_argument("TimeGrid: points must be strictly increasing");
    const std::string summary = describe("custom", points.back(), points.size() - 1);
    return TimeGrid(std::move(points), summary);
}

std::size_t TimeGrid::index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, horizon());
    auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
    if (it == points_.end() || std::abs(*it - t) > tol)
        throw std::invalid_argument("TimeGrid: time " + std::to_string(t) + " is not a grid node");
    return static_cast<std::size_t>(it - points_.begin());
}

bool TimeGrid::contains(double t) const {
    const double tol = 1e-12 * std::max(1.0, horizon());
    auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
    return it != points_.end() && std::abs(*it - t) <= tol;
}

TimeGrid TimeGrid::merged_with(std::span<const double> extra) const {
    std::vector<double> pts = points_;
    const double tol = 1e-12 * std::max(1.0, horizon());
    for (double t : extra) {
        if (t < -tol || t > horizon() + tol)
            throw std::invalid_argument("TimeGrid: merge time outside [0, horizon]");
        pts.push_back(std::min(std::max(t, 0.0), horizon()));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    out.reserve(pts.size());
    for (double t : pts)
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    out.front() = 0.0;
    out.back() = horizon();
    return TimeGrid(std::move(out), describe("merged", horizon(), out.size() - 1));
}

TimeGrid make_grid(double horizon, std::size_t n_steps, Refinement refinement, double ratio) {
    switch (refinement) {
        case Refinement::Uniform:
            return TimeGrid::uniform(horizon, n_steps);
        case Refinement::GeometricTowardEnd:
            return TimeGrid::geometric(horizon, n_steps, ratio);
    }
    throw std::invalid_argument("make_grid: unknown refinement");
}

double geometric_ratio_for(std::size_t n_steps, double shrink) {
    if (n_steps < 2) throw std::invalid_argument("geometric_ratio_for: n_steps must be at least 2");
    if (!(shrink > 0.0 && shrink < 1.0))
        throw std::invalid_argument("geometric_ratio_for: shrink must lie in (0,1)");
    return std::exp(std::log(shrink) / static_cast<double>(n_steps - 1));
}

}  // namespace filtlab
