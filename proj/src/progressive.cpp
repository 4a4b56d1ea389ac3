#include "filtlab/progressive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "filtlab/parallel.hpp"
#include "filtlab/rng.hpp"

namespace filtlab {

VarianceSchedule::VarianceSchedule(std::vector<double> breakpoints,
                                   std::vector<double> levels, double v0)
    : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)), v0_(v0) {
    if (breakpoints_.size() < 2)
        throw std::invalid_argument("VarianceSchedule: need at least two breakpoints");
    if (breakpoints_.front() != 0.0)
        throw std::invalid_argument("VarianceSchedule: first breakpoint must be 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i)
        if (!(breakpoints_[i] > breakpoints_[i - 1]))
            throw std::invalid_argument("VarianceSchedule: breakpoints must be increasing");
    if (levels_.size() != breakpoints_.size() - 1)
        throw std::invalid_argument("VarianceSchedule: need one level per interval");
    for (double s : levels_)
        if (!(s >= 0.0))
            throw std::invalid_argument("VarianceSchedule: sigma levels must be nonnegative");
    if (!(v0_ >= 0.0))
        throw std::invalid_argument("VarianceSchedule: v0 must be nonnegative");
}

VarianceSchedule VarianceSchedule::constant(double sigma, double horizon, double v0) {
    return VarianceSchedule({0.0, horizon}, {sigma}, v0);
}

VarianceSchedule VarianceSchedule::bridge_to(double horizon,
                                             std::vector<double> breakpoints,
                                             std::vector<double> levels) {
    VarianceSchedule probe(breakpoints, levels, 0.0);
    const double total = probe.sigma_sq_integral(0.0, horizon);
    const double v0 = horizon - total;
    if (v0 < -1e-12 * std::max(1.0, horizon))
        throw std::invalid_argument(
            "VarianceSchedule: bridge mode needs int sigma^2 <= horizon (implied v0 < 0)");
    return VarianceSchedule(std::move(breakpoints), std::move(levels),
                            std::max(v0, 0.0));
}

double VarianceSchedule::sigma(double t) const {
    if (t <= 0.0) return levels_.front();
    if (t >= horizon()) return levels_.back();
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return levels_[std::min(k, levels_.size() - 1)];
}

double VarianceSchedule::sigma_sq_integral(double a, double b) const {
    a = std::max(a, 0.0);
    b = std::min(b, horizon());
    if (!(b > a)) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        const double lo = std::max(a, breakpoints_[k]);
        const double hi = std::min(b, breakpoints_[k + 1]);
        if (hi > lo) sum += levels_[k] * levels_[k] * (hi - lo);
    }
    return sum;
}

bool VarianceSchedule::identically_zero() const {
    for (double s : levels_)
        if (s != 0.0) return false;
    return true;
}

double noisy_drift(double t, double v_signal, double b, double horizon,
                   double tail_var) {
    const double den = horizon + tail_var - t;
    if (!(den > 0.0))
        throw std::invalid_argument("noisy_drift: nonpositive denominator T + tail - t");
    return (v_signal - b) / den;
}

double peof_cross_covariance(const VarianceSchedule& schedule, double s) {
    const double horizon = schedule.horizon();
    if (!(s > 0.0) || s >= horizon)
        throw std::invalid_argument("peof_cross_covariance: s must lie in (0, horizon)");
    // int_a^b (C - u)/(P - Q u) du = ((C - P/Q)/Q) log((P-Qa)/(P-Qb)) + (b-a)/Q,
    // with the denominator linear on each sigma piece.
    const double c = horizon + schedule.tail(s);
    double integral = 0.0;
    const auto& bp = schedule.breakpoints();
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
        const double a = std::max(0.0, bp[k]);
        const double b = std::min(s, bp[k + 1]);
        if (!(b > a)) continue;
        const double sig2 = schedule.levels()[k] * schedule.levels()[k];
        const double q = 1.0 + sig2;
        const double p = horizon + schedule.tail(a) + sig2 * a;  // so that P - Q u = T + tail(u) - u
        const double da = p - q * a;
        const double db = p - q * b;
        integral += ((c - p / q) / q) * std::log(da / db) + (b - a) / q;
    }
    return s - integral;
}

namespace {

std::vector<std::size_t> record_indices(const TimeGrid& sim, const TimeGrid& record) {
    std::vector<std::size_t> idx(record.size());
    for (std::size_t r = 0; r < record.size(); ++r) idx[r] = sim.index_of(record[r]);
    return idx;
}

}  // namespace

PeofResult simulate_peof(const VarianceSchedule& schedule, const TimeGrid& grid,
                         std::size_t n_paths, std::uint64_t seed, unsigned workers) {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
    const double horizon = grid.horizon();
    if (std::abs(schedule.horizon() - horizon) > 1e-12 * std::max(1.0, horizon))
        throw std::invalid_argument("simulate_peof: schedule horizon must match grid horizon");

    const auto& bp = schedule.breakpoints();
    const TimeGrid sim = grid.merged_with({bp.data(), bp.size()});
    const std::vector<std::size_t> rec = record_indices(sim, grid);
    const std::size_t m = sim.size();

    PeofResult out{PathBundle(grid, n_paths, seed), PathBundle(grid, n_paths, seed),
                   PathBundle(grid, n_paths, seed)};
    auto& b_terminal = out.b.aux["terminal"];
    b_terminal.assign(n_paths, 0.0);

    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> bpath(m), spath(m);
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            bpath[0] = 0.0;
            spath[0] = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                const double h = sim.step(i);
                const double sqh = std::sqrt(h);
                bpath[i + 1] = bpath[i] + sqh * rng.normal();
                spath[i + 1] = spath[i] + schedule.sigma(sim[i]) * sqh * rng.normal();
            }
            const double b_end = bpath[m - 1];
            const double s_end = spath[m - 1];
            // V_t = B_T + int_t^T sigma dW; innovation by cumulative trapezoid of
            // (V - B)/(T + tail - t). The final node's integrand is the 0/0
            // bridge limit, so the last step falls back to a left rectangle.
            double integral = 0.0;
            double f_prev = (b_end + (s_end - spath[0]) - bpath[0]) /
                            (horizon + schedule.tail(0.0));
            std::size_t r = 0;
            for (std::size_t i = 0; i < m; ++i) {
                if (i > 0) {
                    const double h = sim.step(i - 1);
                    const double t = sim[i];
                    const double v_i = b_end + (s_end - spath[i]);
                    const double den = horizon + schedule.tail(t) - t;
                    if (den > 0.0) {
                        const double f = (v_i - bpath[i]) / den;
                        integral += 0.5 * h * (f_prev + f);
                        f_prev = f;
                    } else {
                        integral += h * f_prev;
                    }
                }
                if (r < rec.size() && rec[r] == i) {
                    out.b.value(p, r) = bpath[i];
                    out.v.value(p, r) = b_end + (s_end - spath[i]);
                    out.innovation.value(p, r) = bpath[i] - integral;
                    ++r;
                }
            }
            b_terminal[p] = b_end;
        }
    });
    return out;
}

ProgResult prog_bridge_simulate(const VarianceSchedule& schedule,
                                const TimeGrid& sim_grid, std::size_t n_paths,
                                std::uint64_t seed, unsigned workers,
                                const TimeGrid* record_grid) {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
    const double horizon = sim_grid.horizon();
    if (std::abs(schedule.horizon() - horizon) > 1e-12 * std::max(1.0, horizon))
        throw std::invalid_argument("prog_bridge_simulate: schedule horizon must match grid");
    if (std::abs(schedule.total_variance() - horizon) > 1e-9 * std::max(1.0, horizon))
        throw std::invalid_argument("prog_bridge_simulate: bridge mode requires v(T) = T");

    const auto& bp = schedule.breakpoints();
    const TimeGrid sim = sim_grid.merged_with({bp.data(), bp.size()});
    const std::size_t m = sim.size();

    // The drift denominator v(t) - t must stay positive strictly before T.
    std::vector<double> gap(m);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        gap[i] = schedule.v(sim[i]) - sim[i];
        if (!(gap[i] > 0.0))
            throw std::invalid_argument("prog_bridge_simulate: v(t) <= t at node " +
                                        std::to_string(i) + " (t=" + std::to_string(sim[i]) + ")");
    }

    const TimeGrid& record = record_grid ? *record_grid : sim_grid;
    const std::vector<std::size_t> rec = record_indices(sim, record);

    ProgResult out{PathBundle(record, n_paths, seed), PathBundle(record, n_paths, seed)};
    auto& b_terminal = out.b.aux["terminal"];
    auto& v_terminal = out.b.aux["V_T"];
    b_terminal.assign(n_paths, 0.0);
    v_terminal.assign(n_paths, 0.0);

    const double v0 = schedule.v0();
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxStream rng(seed, p);
            double v = std::sqrt(v0) * rng.normal();
            double b = 0.0;
            std::size_t r = 0;
            for (std::size_t i = 0; i < m; ++i) {
                if (r < rec.size() && rec[r] == i) {
                    out.b.value(p, r) = b;
                    out.v.value(p, r) = v;
                    ++r;
                }
                if (i + 1 == m) break;
                const double h = sim.step(i);
                const double sqh = std::sqrt(h);
                const double drift = (v - b) / gap[i];
                b += drift * h + sqh * rng.normal();
                v += schedule.sigma(sim[i]) * sqh * rng.normal();
            }
            b_terminal[p] = b;
            v_terminal[p] = v;
        }
    });
    return out;
}

}  // namespace filtlab
