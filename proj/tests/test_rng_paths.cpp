#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "filtlab/math_util.hpp"
#include "filtlab/paths.hpp"
#include "filtlab/rng.hpp"
#include "filtlab/verify.hpp"

using namespace filtlab;

TEST_CASE("PhiloxStream is deterministic and stream-separated") {
    PhiloxStream a(42, 7);
    PhiloxStream b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

    PhiloxStream c(42, 8);
    bool differs = false;
    PhiloxStream a2(42, 7);
    for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
    CHECK(differs);

    PhiloxStream u(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("Brownian paths: zero mean, variance T, reproducible") {
    const TimeGrid grid = make_grid(1.0, 64, Refinement::Uniform);
    const std::size_t n = 100000;
    const PathBundle bundle = simulate_brownian(grid, n, 123);

    const auto& terminal = bundle.aux_values("terminal");
    double mean = 0.0;
    for (double v : terminal) mean += v;
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));

    double var = 0.0;
    for (double v : terminal) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(var - 1.0) <= 0.05);

    // covariance against min(s,t) on a pair subset
    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.25}, {0.25, 0.75}, {0.5, 1.0}};
    auto reports = covariance_test(
        bundle, [](double s, double t) { return std::min(s, t); }, opt);
    for (const auto& r : reports) CHECK(r.pass);

    // bit-identical rerun, and independence from the worker count
    const PathBundle again = simulate_brownian(grid, 3, 123);
    const PathBundle threaded = simulate_brownian(grid, 3, 123, 3);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(bundle.value(p, i) == again.value(p, i));
            CHECK(bundle.value(p, i) == threaded.value(p, i));
        }
}

TEST_CASE("Poisson paths: exact jumps, counts, determinism") {
    const TimeGrid grid = make_grid(1.0, 16, Refinement::Uniform);
    const std::size_t n = 100000;
    const PathBundle bundle = simulate_poisson(1.0, grid, n, 9);

    const auto& terminal = bundle.aux_values("terminal");
    double mean = 0.0;
    for (double v : terminal) mean += v;
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - 1.0) <= 4.0 / std::sqrt(static_cast<double>(n)));

    // Poisson(rate*T) variance equals the mean; CLT band for the estimator
    double var = 0.0;
    for (double v : terminal) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(var - 1.0) <= 0.05);

    // P{N_1 = 0} at rate 2 approximates e^{-2}
    const PathBundle two = simulate_poisson(2.0, grid, n, 10);
    double zero_frac = 0.0;
    for (double v : two.aux_values("terminal"))
        if (v == 0.0) zero_frac += 1.0;
    zero_frac /= static_cast<double>(n);
    const double p0 = std::exp(-2.0);
    CHECK(std::abs(zero_frac - p0) <=
          4.0 * std::sqrt(p0 * (1.0 - p0) / static_cast<double>(n)));

    // a path with no jumps carries all-zero values and an empty jump list
    bool found_empty = false;
    for (std::size_t p = 0; p < bundle.n_paths && !found_empty; ++p) {
        if (bundle.jump_times[p].empty()) {
            found_empty = true;
            for (std::size_t i = 0; i < grid.size(); ++i)
                CHECK(bundle.value(p, i) == 0.0);
        }
    }
    CHECK(found_empty);

    // jump times strictly increasing inside (0, T]
    for (std::size_t p = 0; p < 100; ++p) {
        const auto& jumps = bundle.jump_times[p];
        for (std::size_t j = 0; j < jumps.size(); ++j) {
            CHECK(jumps[j] > 0.0);
            CHECK(jumps[j] <= 1.0);
            if (j > 0) CHECK(jumps[j] > jumps[j - 1]);
        }
    }

    CHECK_THROWS_AS(simulate_poisson(0.0, grid, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_poisson(-1.0, grid, 1, 1), std::invalid_argument);
}

TEST_CASE("hitting-time sampler matches 2*Phi(-1/sqrt(t))") {
    const auto taus = sample_hitting_time_unit(100000, 77);
    TestReport ks =
        ks_test(taus, [](double t) { return hitting_time_cdf_unit(t); }, 0.01);
    CHECK(ks.pass);

    // CDF limits of the target law
    CHECK(hitting_time_cdf_unit(1e-8) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hitting_time_cdf_unit(1e8) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(hitting_time_cdf_unit(1.0) ==
          doctest::Approx(std::erfc(1.0 / std::sqrt(2.0))));
}

TEST_CASE("Euler engine: degenerate cases and failure reporting") {
    const TimeGrid grid = make_grid(1.0, 64, Refinement::Uniform);

    EulerSpec pure_noise;
    pure_noise.drift = [](double, double, double) { return 0.0; };
    pure_noise.diffusion = [](double, double) { return 1.0; };
    const PathBundle noise = simulate_sde_euler(pure_noise, grid, 50000, 5);
    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.5}, {0.5, 1.0}};
    for (const auto& r : covariance_test(
             noise, [](double s, double t) { return std::min(s, t); }, opt))
        CHECK(r.pass);

    EulerSpec ode;
    ode.drift = [](double, double, double) { return 0.7; };
    ode.diffusion = [](double, double) { return 0.0; };
    const PathBundle det = simulate_sde_euler(ode, grid, 2, 5);
    CHECK(det.value(0, grid.size() - 1) == doctest::Approx(0.7).epsilon(1e-12));

    EulerSpec bad;
    bad.drift = [](double t, double, double) {
        return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    bad.diffusion = [](double, double) { return 1.0; };
    CHECK_THROWS_WITH_AS(simulate_sde_euler(bad, grid, 1, 5),
                         doctest::Contains("node"), std::runtime_error);
}

TEST_CASE("Euler bridge pins the terminal value on a geometric grid") {
    const std::size_t steps = 4096;
    const TimeGrid grid =
        TimeGrid::geometric(1.0, steps, geometric_ratio_for(steps));
    EulerSpec bridge;
    bridge.drift = [](double t, double x, double) { return (0.0 - x) / (1.0 - t); };
    bridge.diffusion = [](double, double) { return 1.0; };
    const PathBundle bundle = simulate_sde_euler(bridge, grid, 4000, 21);
    bundle.aux_values("terminal");  // present
    double rms = 0.0;
    const std::size_t last = grid.size() - 1;
    for (std::size_t p = 0; p < bundle.n_paths; ++p)
        rms += bundle.value(p, last) * bundle.value(p, last);
    rms = std::sqrt(rms / static_cast<double>(bundle.n_paths));
    CHECK(rms <= 0.05);
}
