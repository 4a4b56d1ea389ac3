#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "filtlab/apps.hpp"
#include "filtlab/math_util.hpp"
#include "filtlab/verify.hpp"

using namespace filtlab;

TEST_CASE("structural model validation") {
    StructuralModel model;
    model.barrier = 2.0;
    model.initial_value = 1.0;
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    CHECK_THROWS_AS(structural_default_simulate(model, grid, 10, 1),
                    std::invalid_argument);
}

TEST_CASE("structural default: no-default regimes") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 64);

    StructuralModel far_barrier;
    far_barrier.barrier = 1e-9;  // K -> 0: essentially out of reach
    far_barrier.initial_value = 1.0;
    const StructuralResult far = structural_default_simulate(far_barrier, grid, 2000, 5);
    for (const auto& pt : far.survival) CHECK(pt.estimate == 1.0);

    StructuralModel frozen;
    frozen.vol_sigma = 0.0;
    frozen.drift_mu = 0.0;
    frozen.barrier = std::exp(-1.0);
    frozen.initial_value = 1.0;
    const StructuralResult still = structural_default_simulate(frozen, grid, 500, 6);
    for (const auto& pt : still.survival) CHECK(pt.estimate == 1.0);
}

TEST_CASE("structural default approximates the continuous hitting law") {
    StructuralModel model;
    model.barrier = std::exp(-1.0);
    model.initial_value = 1.0;
    const TimeGrid grid = TimeGrid::uniform(1.0, 2048);
    const std::size_t n = 20000;
    const StructuralResult res = structural_default_simulate(model, grid, n, 7);
    const double p_hat = 1.0 - res.survival.back().estimate;
    const double target = 0.3173105078629141;
    const double se = std::sqrt(target * (1.0 - target) / static_cast<double>(n));
    const double bias_allowance = 0.5 * std::sqrt(1.0 / 2048.0);
    CHECK(std::abs(p_hat - target) <= 4.0 * se + bias_allowance);
    CHECK(p_hat < target + 4.0 * se);  // discrete monitoring biases downward

    // survival curve is monotone nonincreasing in [0,1]
    for (std::size_t i = 1; i < res.survival.size(); ++i) {
        CHECK(res.survival[i].estimate <= res.survival[i - 1].estimate);
        CHECK(res.survival[i].estimate >= 0.0);
        CHECK(res.survival[i].estimate <= 1.0);
    }
}

TEST_CASE("structural default with jumps stays runnable") {
    StructuralModel model;
    model.barrier = std::exp(-1.0);
    model.initial_value = 1.0;
    model.jumps = CompoundJumps{2.0, JumpLaw{JumpLaw::Kind::Normal, -0.1, 0.2, 0.0}};
    const TimeGrid grid = TimeGrid::uniform(1.0, 128);
    const StructuralResult res = structural_default_simulate(model, grid, 3000, 8);
    const double p_plain = 0.3173105078629141;
    // downward jumps can only add defaults
    CHECK(1.0 - res.survival.back().estimate > p_plain - 0.05);
}

TEST_CASE("default_prob_curve trivial shapes") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> none = {inf, inf, inf};
    for (const auto& pt : default_prob_curve(none, grid)) CHECK(pt.estimate == 0.0);

    std::vector<double> all_half(100, 0.5);
    const auto step = default_prob_curve(all_half, grid);
    CHECK(step[0].estimate == 0.0);   // t = 0
    CHECK(step[1].estimate == 0.0);   // t = 0.25
    CHECK(step[2].estimate == 1.0);   // t = 0.5
    CHECK(step[4].estimate == 1.0);

    for (std::size_t i = 1; i < step.size(); ++i)
        CHECK(step[i].estimate >= step[i - 1].estimate);
}

TEST_CASE("kyle-back g4 variant reproduces the Brownian law") {
    KyleBackConfig cfg;
    cfg.output_grid = TimeGrid::uniform(1.0, 128);
    cfg.bridge_steps = 1024;
    cfg.n_paths = 20000;
    cfg.seed = 99;
    const KyleBackResult sim = kyle_back_simulate(cfg);

    CovarianceTestOptions opt;
    opt.pairs = {{0.25, 0.5}, {0.5, 0.75}};
    for (const auto& r : covariance_test(
             sim.orders, [](double s, double t) { return std::min(s, t); }, opt))
        CHECK(r.pass);

    // defaulted paths end pinned at -1 just before tau
    const auto& pre = sim.orders.aux_values("pre_default_value");
    const auto& defaulted = sim.orders.aux_values("defaulted");
    const auto& taus = sim.orders.aux_values("tau");
    const auto& hits = sim.orders.aux_values("hit_time");
    double rms = 0.0;
    std::size_t n_def = 0;
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        if (defaulted[p] == 0.0) continue;
        rms += (pre[p] + 1.0) * (pre[p] + 1.0);
        ++n_def;
        CHECK(hits[p] <= taus[p] + 1e-9);
    }
    rms = std::sqrt(rms / static_cast<double>(n_def));
    CHECK(rms <= 0.05);

    // share of defaulted paths matches 2*Phi(-1)
    const double frac = static_cast<double>(n_def) / static_cast<double>(cfg.n_paths);
    const double target = hitting_time_cdf_unit(1.0);
    CHECK(std::abs(frac - target) <=
          4.0 * std::sqrt(target * (1.0 - target) / static_cast<double>(cfg.n_paths)));

    // conditional hitting law on [0,1]
    std::vector<double> hit_samples;
    for (double h : hits)
        if (h <= 1.0) hit_samples.push_back(h);
    const TestReport ks = ks_test(
        hit_samples,
        [target](double t) { return hitting_time_cdf_unit(std::min(t, 1.0)) / target; },
        0.01);
    CHECK(ks.pass);
}

TEST_CASE("kyle-back as-printed variant runs without correctness claims") {
    KyleBackConfig cfg;
    cfg.output_grid = TimeGrid::uniform(1.0, 64);
    cfg.bridge_steps = 256;
    cfg.n_paths = 500;
    cfg.seed = 3;
    cfg.variant = KyleBackVariant::AsPrinted;
    const KyleBackResult sim = kyle_back_simulate(cfg);
    CHECK(sim.orders.n_paths == 500);
    // values stay finite even though the printed drift is singular at tau
    for (std::size_t p = 0; p < 500; ++p)
        for (std::size_t i = 0; i < sim.orders.grid.size(); ++i)
            CHECK(std::isfinite(sim.orders.value(p, i)));
}

TEST_CASE("kyle-back config validation") {
    KyleBackConfig cfg;
    cfg.output_grid = TimeGrid::uniform(2.0, 64);  // horizon must be 1
    cfg.n_paths = 10;
    CHECK_THROWS_AS(kyle_back_simulate(cfg), std::invalid_argument);
    CHECK_THROWS_AS(parse_kyle_back_variant("bogus"), std::invalid_argument);
    CHECK(parse_kyle_back_variant("g4_consistent") == KyleBackVariant::G4Consistent);
    CHECK(parse_kyle_back_variant("as-printed") == KyleBackVariant::AsPrinted);
}
