#pragma once

#include <cstdint>
#include <vector>

#include "filtlab/path_bundle.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

// Piecewise-constant signal volatility sigma_t on [0, T] plus the variance
// v0 of the initial signal value. Keeping sigma piecewise constant makes
// v(t) = v0 + int_0^t sigma^2 and tail(t) = int_t^T sigma^2 exact, so the
// acceptance targets carry no quadrature error.
class VarianceSchedule {
public:
    // breakpoints = {0 = b_0 < b_1 < ... < b_K = T}, levels has K entries,
    // sigma == levels[k] on [b_k, b_{k+1}).
    VarianceSchedule(std::vector<double> breakpoints, std::vector<double> levels,
                     double v0);

    static VarianceSchedule constant(double sigma, double horizon, double v0);
    // Chooses v0 = horizon - int_0^T sigma^2 so that v(T) = T (bridge mode);
    // rejects schedules that would need v0 < 0.
    static VarianceSchedule bridge_to(double horizon, std::vector<double> breakpoints,
                                      std::vector<double> levels);

    double horizon() const { return breakpoints_.back(); }
    double v0() const { return v0_; }
    double sigma(double t) const;
    double sigma_sq_integral(double a, double b) const;
    double v(double t) const { return v0_ + sigma_sq_integral(0.0, t); }
    double tail(double t) const { return sigma_sq_integral(t, horizon()); }
    double total_variance() const { return v(horizon()); }
    bool identically_zero() const;

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& levels() const { return levels_; }

private:
    std::vector<double> breakpoints_;
    std::vector<double> levels_;
    double v0_;
};

// Drift (v_signal - b)/(T + tail_var - t) of the noisy-terminal-signal
// decomposition; the denominator must stay positive.
double noisy_drift(double t, double v_signal, double b, double horizon,
                   double tail_var);

// Closed form of E[W~_t V_s] for t >= s:
//   s - int_0^s (T + tail(s) - u)/(T + tail(u) - u) du,
// integrated exactly piece by piece.
double peof_cross_covariance(const VarianceSchedule& schedule, double s);

struct PeofResult {
    PathBundle b;           // the observed Brownian motion
    PathBundle v;           // the noisy terminal signal V_t = B_T + int_t^T sigma dW
    PathBundle innovation;  // W~_t = B_t - int_0^t noisy_drift du (trapezoid)
};

// Simulates the noisy-signal construction. Integration happens on the grid
// merged with the schedule breakpoints; values are recorded at the caller's
// grid nodes.
PeofResult simulate_peof(const VarianceSchedule& schedule, const TimeGrid& grid,
                         std::size_t n_paths, std::uint64_t seed,
                         unsigned workers = 0);

struct ProgResult {
    PathBundle b;  // Euler solution of dB = dW2 + (V-B)/(v(t)-t) dt
    PathBundle v;  // signal V_t = V_0 + int_0^t sigma dW1
};

// Variance-schedule bridge: requires v(T) = T and v(t) > t at every
// simulation node below T (the offending node is named otherwise). B pins to
// V at the horizon. record_grid, when given, must be a subset of the
// simulation grid and selects which nodes are stored.
ProgResult prog_bridge_simulate(const VarianceSchedule& schedule,
                                const TimeGrid& sim_grid, std::size_t n_paths,
                                std::uint64_t seed, unsigned workers = 0,
                                const TimeGrid* record_grid = nullptr);

}  // namespace filtlab
