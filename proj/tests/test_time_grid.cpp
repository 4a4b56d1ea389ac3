#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "filtlab/time_grid.hpp"

using namespace filtlab;

TEST_CASE("uniform grid is an equal partition") {
    const TimeGrid g = make_grid(1.0, 4, Refinement::Uniform);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(0.25));
    CHECK(g[2] == doctest::Approx(0.5));
    CHECK(g[3] == doctest::Approx(0.75));
    CHECK(g[4] == 1.0);

    const TimeGrid g2 = make_grid(1.0, 2, Refinement::Uniform);
    CHECK(g2[1] == doctest::Approx(0.5));
    CHECK(g2[2] == 1.0);
}

TEST_CASE("geometric grid halves steps toward the endpoint") {
    // Oracle: sum the geometric series and normalize to total length 1.
    const double beta = 0.5;
    const double first = (1.0 - beta) / (1.0 - std::pow(beta, 4.0));
    const TimeGrid g = make_grid(1.0, 4, Refinement::GeometricTowardEnd, beta);
    REQUIRE(g.size() == 5);
    double expected = 0.0;
    double h = first;
    for (std::size_t i = 1; i < g.size(); ++i) {
        expected += h;
        CHECK(g[i] == doctest::Approx(expected).epsilon(1e-14));
        h *= beta;
    }
    CHECK(g.step(3) == doctest::Approx(g.step(0) * 0.125));
    for (std::size_t i = 0; i + 1 < g.n_steps(); ++i)
        CHECK(g.step(i + 1) < g.step(i));  // steps shrink toward the endpoint
    CHECK(g[4] == 1.0);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(make_grid(0.0, 4, Refinement::Uniform), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(-1.0, 4, Refinement::Uniform), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 1, Refinement::Uniform), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 4, Refinement::GeometricTowardEnd, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 4, Refinement::GeometricTowardEnd, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::from_points({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::from_points({0.1, 0.5}), std::invalid_argument);
}

TEST_CASE("index_of and merged_with") {
    const TimeGrid g = make_grid(1.0, 8, Refinement::Uniform);
    CHECK(g.index_of(0.25) == 2);
    CHECK(g.index_of(1.0) == 8);
    CHECK_THROWS_AS(g.index_of(0.3), std::invalid_argument);

    const double extra[] = {0.3, 0.25, 0.99};
    const TimeGrid m = g.merged_with(extra);
    CHECK(m.size() == g.size() + 2);  // 0.25 already present
    CHECK(m.contains(0.3));
    CHECK(m.contains(0.99));
    CHECK(m.horizon() == 1.0);
}

TEST_CASE("geometric_ratio_for hits the requested shrink") {
    const std::size_t n = 4096;
    const double r = geometric_ratio_for(n, 1e-10);
    CHECK(std::pow(r, static_cast<double>(n - 1)) == doctest::Approx(1e-10).epsilon(1e-9));
}
