#include "filtlab/initial_enlargement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "filtlab/parallel.hpp"
#include "filtlab/rng.hpp"

namespace filtlab {

namespace {

void require_before_horizon(double t, double horizon, const char* who) {
    if (!(t >= 0.0) || t >= horizon)
        throw std::invalid_argument(std::string(who) + ": t must lie in [0, horizon)");
}

}  // namespace

double bb_density_q(double t, double b, double x, double horizon) {
    require_before_horizon(t, horizon, "bb_density_q");
    const double v = horizon - t;
    const double d = x - b;
    return std::sqrt(horizon / v) *
           std::exp(-0.5 * d * d / v + 0.5 * x * x / horizon);
}

double bb_drift(double t, double b, double x, double horizon) {
    require_before_horizon(t, horizon, "bb_drift");
    return (x - b) / (horizon - t);
}

double diffusion_info_drift(
    const std::function<double(double, double, double)>& transition_density,
    double t, double y, double x, double horizon,
    const std::function<double(double)>& sigma, double fd_step) {
    require_before_horizon(t, horizon, "diffusion_info_drift");
    const double s = sigma(y);
    const double s2 = s * s;
    if (s2 == 0.0) return 0.0;
    const double v = horizon - t;
    const double h = fd_step > 0.0 ? fd_step : 1e-4 * (1.0 + std::abs(y));
    const double up = transition_density(v, y + h, x);
    const double down = transition_density(v, y - h, x);
    if (!(up > 0.0) || !(down > 0.0))
        throw std::domain_error("diffusion_info_drift: transition density not positive");
    return s2 * (std::log(up) - std::log(down)) / (2.0 * h);
}

double poisson_density_q(double t, long long k, long long n_t, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("poisson_density_q: rate must be positive");
    if (k < 0 || n_t < 0)
        throw std::invalid_argument("poisson_density_q: counts must be nonnegative");
    require_before_horizon(t, 1.0, "poisson_density_q");
    if (k < n_t) return 0.0;  // impossible terminal count
    const double m = static_cast<double>(k - n_t);
    const double log_q = rate * t - static_cast<double>(n_t) * std::log(rate) +
                         m * std::log1p(-t) + std::lgamma(static_cast<double>(k) + 1.0) -
                         std::lgamma(m + 1.0);
    return std::exp(log_q);
}

double poisson_bridge_intensity(double t_minus, long long k, long long n_t_minus) {
    if (k < n_t_minus)
        throw std::invalid_argument("poisson_bridge_intensity: k must be at least N_{t-}");
    require_before_horizon(t_minus, 1.0, "poisson_bridge_intensity");
    return static_cast<double>(k - n_t_minus) / (1.0 - t_minus);
}

double nth_jump_tail(double t, double x, long long n_t, long long n, double rate,
                     bool nth_jump_seen_by_x) {
    if (n < 1) throw std::invalid_argument("nth_jump_tail: n must be at least 1");
    if (!(x >= 0.0)) throw std::invalid_argument("nth_jump_tail: x must be nonnegative");
    if (!(rate > 0.0)) throw std::invalid_argument("nth_jump_tail: rate must be positive");
    if (n_t >= n) {
        // T_n <= t is known on the path; the tail is an indicator.
        if (x >= t) return 0.0;
        return nth_jump_seen_by_x ? 0.0 : 1.0;
    }
    // Erlang(n - N_t, rate) survival evaluated at (x - t)_+.
    const long long shape = n - n_t;
    const double y = std::max(x - t, 0.0) * rate;
    double term = std::exp(-y);
    double sum = term;
    for (long long j = 1; j < shape; ++j) {
        term *= y / static_cast<double>(j);
        sum += term;
    }
    return sum;
}

CompensatorIncrement nth_jump_compensator_increment(double u, long long n_u,
                                                    long long n, double t_n,
                                                    double rate) {
    if (n < 1) throw std::invalid_argument("nth_jump_compensator_increment: n must be at least 1");
    if (u == t_n) return {0.0, true};
    if (u > t_n) return {rate, false};
    if (n_u > n - 1)
        throw std::invalid_argument(
            "nth_jump_compensator_increment: N_u exceeds n-1 before T_n");
    return {static_cast<double>(n - n_u - 1) / (t_n - u), false};
}

double nth_jump_rate(double u, long long n_u, long long n, double t_n, double rate) {
    if (u == t_n)
        throw std::invalid_argument("nth_jump_rate: rate undefined at u == T_n");
    return nth_jump_compensator_increment(u, n_u, n, t_n, rate).rate;
}

double hitting_cdf(double t, double b, double s, bool alive) {
    if (!alive) return 1.0;
    if (!(s > t)) throw std::invalid_argument("hitting_cdf: need s > t while alive");
    if (!(b > -1.0)) throw std::invalid_argument("hitting_cdf: need b > -1 while alive");
    const double a = (1.0 + b) / std::sqrt(s - t);
    return std::erfc(a / std::sqrt(2.0));  // == 2 * Phi(-a)
}

double hitting_alpha(double t, double b, double tau) {
    if (!(b > -1.0)) throw std::invalid_argument("hitting_alpha: need b > -1");
    if (!(t < tau)) throw std::invalid_argument("hitting_alpha: need t < tau");
    const double w = 1.0 + b;
    return 1.0 / w - w / (tau - t);
}

PathBundle enlarged_brownian_given_tau(double tau, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed,
                                       unsigned workers, double drift_clip) {
    if (!(tau > 0.0)) throw std::invalid_argument("enlarged_brownian_given_tau: tau must be positive");
    if (std::abs(grid.horizon() - tau) > 1e-12 * std::max(1.0, tau))
        throw std::invalid_argument("enlarged_brownian_given_tau: grid horizon must equal tau");
    if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
    PathBundle bundle(grid, n_paths, seed);
    auto& terminal = bundle.aux["terminal"];
    auto& min_pre = bundle.aux["min_pre_terminal"];
    terminal.assign(n_paths, 0.0);
    min_pre.assign(n_paths, 0.0);
    std::vector<std::uint32_t> clamps(n_paths, 0);
    const std::size_t m = grid.size();
    // Integrate the squared barrier distance Z = (1+B)^2, which solves
    //   dZ = (3 - 2Z/(tau-t)) dt + 2 sqrt(Z) dbeta
    // by Ito's formula. The noise vanishes at the barrier and the drift is +3
    // there (squared Bessel of dimension 3), so the Euler recursion stays
    // positive and the reported B = sqrt(Z) - 1 never tunnels through -1 the
    // way a raw Euler step in B-coordinates does near the pinning time.
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            double z = 1.0;  // (1 + B_0)^2
            double lo = 0.0;
            bundle.value(p, 0) = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                const double h = grid.step(i);
                double mu = 3.0 - 2.0 * z / (tau - grid[i]);
                if (mu > drift_clip) {
                    mu = drift_clip;
                    ++clamps[p];
                } else if (mu < -drift_clip) {
                    mu = -drift_clip;
                    ++clamps[p];
                }
                z += mu * h + 2.0 * std::sqrt(z * h) * rng.normal();
                if (z < 0.0) z = -z;
                const double x = std::sqrt(z) - 1.0;
                bundle.value(p, i + 1) = x;
                if (i + 2 < m) lo = std::min(lo, x);  // nodes strictly before the final one
            }
            terminal[p] = std::sqrt(z) - 1.0;
            min_pre[p] = lo;
        }
    });
    std::size_t total = 0;
    for (std::uint32_t c : clamps) total += c;
    bundle.drift_clamp_events = total;
    return bundle;
}

}  // namespace filtlab
