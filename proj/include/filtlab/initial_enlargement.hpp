#pragma once

#include <cstdint>
#include <functional>

#include "filtlab/path_bundle.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

// --- Brownian motion revealed at its terminal value --------------------

// Conditional density process of L = B_T relative to its prior law,
// normalized so q(0, 0, x) = 1: the ratio of the centered normal density
// with variance T-t at x-b to the one with variance T at x.
double bb_density_q(double t, double b, double x, double horizon);

// Information drift (x - b)/(T - t) of the revealed-endpoint bridge.
double bb_drift(double t, double b, double x, double horizon);

// Drift sigma(y)^2 * d/dy log pi(T-t, y, x) for a diffusion whose terminal
// conditional law has transition density pi(v, y, x); the log-derivative is
// taken by central finite difference. fd_step <= 0 selects the default
// 1e-4 * (1 + |y|).
double diffusion_info_drift(
    const std::function<double(double, double, double)>& transition_density,
    double t, double y, double x, double horizon,
    const std::function<double(double)>& sigma, double fd_step = 0.0);

// --- Poisson process on [0,1] revealed at its terminal count -----------

// Conditional density process q_t^k = exp(rate*t) rate^{-N_t} (1-t)^{k-N_t}
// k! / (k-N_t)! for k >= N_t, and 0 for impossible terminal counts k < N_t.
double poisson_density_q(double t, long long k, long long n_t, double rate);

// Bridge intensity (k - N_{t-})/(1 - t): subtracting its time integral from
// the count yields the martingale in the enlarged filtration.
double poisson_bridge_intensity(double t_minus, long long k, long long n_t_minus);

// --- n-th jump of a Poisson process -------------------------------------

// P{T_n > x | F_t}: indicator bookkeeping once n jumps have been seen,
// otherwise the Erlang survival with shape n - N_t evaluated at (x-t)_+.
// nth_jump_seen_by_x matters only when N_t >= n: it tells whether the n-th
// jump had already happened by time x on the observed path.
double nth_jump_tail(double t, double x, long long n_t, long long n, double rate,
                     bool nth_jump_seen_by_x = false);

struct CompensatorIncrement {
    double rate = 0.0;
    bool unit_jump = false;  // set exactly at u == T_n
};

// Compensator pieces of the four-term decomposition
//   N_t - rate*(t - T_n ^ t) - int_0^{T_n ^ t} (n - N_u - 1)/(T_n - u) du - 1{T_n <= t}.
// Before T_n the rate is (n - N_u - 1)/(T_n - u); after T_n it is the plain
// Poisson rate; the unit jump at T_n is reported through the flag.
CompensatorIncrement nth_jump_compensator_increment(double u, long long n_u,
                                                    long long n, double t_n,
                                                    double rate);

// Rate-only accessor; querying the rate exactly at u == T_n is an error
// (the jump there is handled by the flag above).
double nth_jump_rate(double u, long long n_u, long long n, double t_n, double rate);

// --- First hitting time of level -1 -------------------------------------

// P{tau <= s | F_t} = 2*Phi(-(1+b)/sqrt(s-t)) while alive; 1 once absorbed
// with s >= tau (the alive flag makes the indicator bookkeeping explicit).
double hitting_cdf(double t, double b, double s, bool alive);

// Information drift 1/(1+b) - (1+b)/(tau - t) under initial enlargement by tau.
double hitting_alpha(double t, double b, double tau);

// Euler paths of dB = dbeta + hitting_alpha dt started at 0 on a grid whose
// horizon is tau (refined toward it); paths stay above -1 and pin to -1 at
// the end. The drift is evaluated with the state floored just above -1 so
// that rare discrete-noise crossings are pushed back instead of exploding.
PathBundle enlarged_brownian_given_tau(double tau, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed,
                                       unsigned workers = 0, double drift_clip = 1e4);

}  // namespace filtlab
