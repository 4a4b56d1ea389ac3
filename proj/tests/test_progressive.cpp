#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "filtlab/math_util.hpp"
#include "filtlab/progressive.hpp"
#include "filtlab/verify.hpp"

using namespace filtlab;

TEST_CASE("VarianceSchedule bookkeeping") {
    const VarianceSchedule s({0.0, 0.5, 1.0}, {0.5, 1.0}, 0.25);
    CHECK(s.sigma(0.2) == 0.5);
    CHECK(s.sigma(0.7) == 1.0);
    CHECK(s.v(0.0) == doctest::Approx(0.25));
    CHECK(s.v(0.5) == doctest::Approx(0.25 + 0.125));
    CHECK(s.v(1.0) == doctest::Approx(0.25 + 0.125 + 0.5));
    CHECK(s.tail(0.5) == doctest::Approx(0.5));
    CHECK(s.v(0.75) + s.tail(0.75) - s.v0() ==
          doctest::Approx(s.sigma_sq_integral(0.0, 1.0)));

    CHECK_THROWS_AS(VarianceSchedule({0.5, 1.0}, {1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(VarianceSchedule({0.0, 1.0}, {1.0, 2.0}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(VarianceSchedule({0.0, 1.0}, {-1.0}, 0.0), std::invalid_argument);

    // bridge mode chooses v0 so that v(T) = T
    const VarianceSchedule b =
        VarianceSchedule::bridge_to(1.0, {0.0, 0.5, 1.0}, {0.5, std::sqrt(0.75)});
    CHECK(b.v0() == doctest::Approx(0.5));
    CHECK(b.total_variance() == doctest::Approx(1.0));
    CHECK_THROWS_AS(VarianceSchedule::bridge_to(1.0, {0.0, 1.0}, {2.0}),
                    std::invalid_argument);
}

TEST_CASE("noisy_drift") {
    CHECK(noisy_drift(0.3, 0.8, 0.8, 1.0, 0.4) == 0.0);
    CHECK(noisy_drift(0.0, 1.0, 0.0, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(noisy_drift(2.0, 1.0, 0.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("peof cross covariance closed form matches quadrature") {
    const VarianceSchedule s({0.0, 0.4, 1.0}, {0.6, 1.3}, 0.0);
    for (double at : {0.25, 0.5, 0.75}) {
        const double closed = peof_cross_covariance(s, at);
        const double quad =
            at - integrate(
                     [&](double u) {
                         return (1.0 + s.tail(at) - u) / (1.0 + s.tail(u) - u);
                     },
                     0.0, at, 1e-11);
        CHECK(closed == doctest::Approx(quad).epsilon(1e-9));
    }
    // sigma == 0 collapses the integrand to 1, so the value is 0
    const VarianceSchedule z({0.0, 1.0}, {0.0}, 0.0);
    CHECK(peof_cross_covariance(z, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("simulate_peof innovation is Brownian and correlated with the signal") {
    const VarianceSchedule s({0.0, 0.5, 1.0}, {0.5, 1.0}, 0.0);
    const TimeGrid grid = make_grid(1.0, 128, Refinement::Uniform);
    const std::size_t n = 40000;
    const PeofResult sim = simulate_peof(s, grid, n, 808);

    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.25}, {0.25, 0.75}, {0.5, 0.75}};
    for (const auto& r : covariance_test(
             sim.innovation, [](double a, double b) { return std::min(a, b); }, opt))
        CHECK(r.pass);

    // E[W~_t V_s] matches the closed form and is positive
    const std::size_t it = grid.index_of(0.75);
    const std::size_t is = grid.index_of(0.5);
    std::vector<double> y(n);
    for (std::size_t p = 0; p < n; ++p)
        y[p] = sim.innovation.value(p, it) * sim.v.value(p, is);
    const TestReport r =
        mean_value_test(y, peof_cross_covariance(s, 0.5), 4.0, "cross");
    CHECK(r.pass);
    CHECK(r.statistic + peof_cross_covariance(s, 0.5) > 0.0);

    // V_t = B_T + int_t^T sigma dW, so Var(V_t) = T + tail(t)
    std::vector<double> vsq(n);
    for (std::size_t p = 0; p < n; ++p)
        vsq[p] = sim.v.value(p, is) * sim.v.value(p, is);
    CHECK(mean_value_test(vsq, 1.0 + s.tail(0.5), 4.0, "var V").pass);
}

TEST_CASE("simulate_peof with sigma == 0 reduces to the revealed-endpoint bridge") {
    const VarianceSchedule z({0.0, 1.0}, {0.0}, 0.0);
    const TimeGrid grid = make_grid(1.0, 128, Refinement::Uniform);
    const std::size_t n = 30000;
    const PeofResult sim = simulate_peof(z, grid, n, 909);

    // V is constant in t and equals B_T
    const auto& b_term = sim.b.aux_values("terminal");
    for (std::size_t p = 0; p < 50; ++p) {
        CHECK(sim.v.value(p, 0) == doctest::Approx(b_term[p]));
        CHECK(sim.v.value(p, 64) == doctest::Approx(b_term[p]));
    }

    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.5}, {0.5, 0.75}};
    for (const auto& r : covariance_test(
             sim.innovation, [](double a, double b) { return std::min(a, b); }, opt))
        CHECK(r.pass);
}

TEST_CASE("prog_bridge_simulate moment identities and pinning") {
    const VarianceSchedule s =
        VarianceSchedule::bridge_to(1.0, {0.0, 0.5, 1.0}, {0.5, std::sqrt(0.75)});
    const TimeGrid sim_grid = TimeGrid::uniform(1.0, 512);
    const TimeGrid record = TimeGrid::uniform(1.0, 16);
    const std::size_t n = 40000;
    const ProgResult sim = prog_bridge_simulate(s, sim_grid, n, 311, 0, &record);

    for (double t : {0.25, 0.5, 0.75}) {
        const std::size_t i = record.index_of(t);
        std::vector<double> gap(n), prod(n);
        for (std::size_t p = 0; p < n; ++p) {
            const double d = sim.b.value(p, i) - sim.v.value(p, i);
            gap[p] = d * d;
            prod[p] = sim.b.value(p, i) * sim.v.value(p, i);
        }
        CHECK(mean_value_test(gap, s.v(t) - t, 4.0, "gap").pass);
        CHECK(mean_value_test(prod, t, 4.0, "BV").pass);
    }

    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.75}, {0.5, 0.75}};
    for (const auto& r : covariance_test(
             sim.b, [](double a, double b) { return std::min(a, b); }, opt))
        CHECK(r.pass);

    // pinning on a geometric grid, improving under refinement
    double prev_rms = 0.0;
    for (int level = 0; level < 2; ++level) {
        const std::size_t steps = level == 0 ? 1024 : 4096;
        const TimeGrid g = TimeGrid::geometric(1.0, steps, geometric_ratio_for(steps));
        const TimeGrid rec = TimeGrid::from_points({0.0, 1.0});
        const ProgResult pin = prog_bridge_simulate(s, g, 8000, 312, 0, &rec);
        const TestReport r = terminal_pinning_test(pin.b, "V_T", 0.05);
        CHECK(r.pass);
        if (level == 1) CHECK(r.statistic < prev_rms);
        prev_rms = r.statistic;
    }
}

TEST_CASE("prog_bridge_simulate rejects schedules with v(t) <= t") {
    // v(t) - t goes negative in the middle of this schedule
    const VarianceSchedule bad({0.0, 0.5, 1.0}, {0.1, std::sqrt(1.99)}, 0.0);
    CHECK(bad.total_variance() == doctest::Approx(1.0));
    const TimeGrid grid = TimeGrid::uniform(1.0, 64);
    CHECK_THROWS_WITH_AS(prog_bridge_simulate(bad, grid, 10, 1),
                         doctest::Contains("node"), std::invalid_argument);

    // v(T) != T is rejected up front
    const VarianceSchedule off({0.0, 1.0}, {0.5}, 0.1);
    CHECK_THROWS_AS(prog_bridge_simulate(off, grid, 10, 1), std::invalid_argument);
}
