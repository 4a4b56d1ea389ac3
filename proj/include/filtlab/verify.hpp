#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "filtlab/levy.hpp"
#include "filtlab/path_bundle.hpp"
#include "filtlab/time_grid.hpp"

namespace filtlab {

// One Monte Carlo verdict. For equality tests pass <=> |z| <= threshold with
// z = statistic/stderr; one-sided tests (pinning RMS, KS) instead compare the
// statistic against the threshold directly. negative_control marks tests
// that are REQUIRED to fail (the suite asserts both directions).
struct TestReport {
    std::string name;
    double statistic = 0.0;
    double stderr_ = 0.0;
    double z = 0.0;
    double threshold = 4.0;
    bool pass = false;
    bool one_sided = false;
    bool negative_control = false;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string grid_summary;

    // A report is in order if it passed, or failed while marked as a control.
    bool as_expected() const { return negative_control ? !pass : pass; }
};

// Bounded functional of a scalar (a state value or the revealed variable),
// with the sample median available for indicator cuts.
struct BoundedFunctional {
    std::string name;
    std::function<double(double value, double median)> eval;
};

std::vector<BoundedFunctional> default_z_family();
std::vector<BoundedFunctional> default_g_family();
std::vector<BoundedFunctional> unit_family();

// Cumulative compensator A_t of one path, evaluated at a grid time.
using CompensatorFn =
    std::function<double(const PathBundle&, std::size_t path, double t)>;

struct MartingaleTestOptions {
    std::vector<std::pair<double, double>> pairs;
    std::vector<BoundedFunctional> z_family = default_z_family();
    std::vector<BoundedFunctional> g_family = default_g_family();
    double threshold = 4.0;
    std::string name_prefix;
    bool negative_control = false;
    unsigned workers = 0;
};

// Estimates E[Z(path_s) g(L) (X_t - X_s)] with X = M - A for every
// (s, t, Z, g) combination; the theorem under test says the expectation is 0.
// s and t must be grid nodes. l_aux names the revealed variable in the
// bundle's aux table; leave it empty to test a plain F-martingale (the g
// family is then evaluated at 0).
std::vector<TestReport> martingale_increment_test(const PathBundle& bundle,
                                                  const CompensatorFn& compensator,
                                                  const std::string& l_aux,
                                                  const MartingaleTestOptions& options);

struct CovarianceTestOptions {
    std::vector<std::pair<double, double>> pairs;
    double threshold = 4.0;
    std::string name_prefix;
    bool negative_control = false;
};

// Sample covariance of (X_s, X_t) against target(s, t).
std::vector<TestReport> covariance_test(const PathBundle& bundle,
                                        const std::function<double(double, double)>& target,
                                        const CovarianceTestOptions& options);

// One-sided RMS check of the final grid value against a per-path aux target.
TestReport terminal_pinning_test(const PathBundle& bundle,
                                 const std::string& target_aux, double rms_bound,
                                 const std::string& name = "terminal pinning");

// Bounded functional of the path state at time s (for the CF identity test).
struct PathFunctional {
    std::string name;
    std::function<double(double)> eval;
};

struct CfIdentityOptions {
    std::vector<double> thetas;
    double s = 0.25;
    double t = 0.5;
    std::vector<PathFunctional> h_family;
    double threshold = 4.0;
    std::string name_prefix;
    unsigned workers = 0;
};

// Monte Carlo check of
//   E[e^{i theta Z_T} h_s int_s^t (Z_T - Z_u)/(T - u) du]
//     = E[e^{i theta Z_T} h_s (Z_t - Z_s)],
// reported separately for the real and imaginary parts of the difference.
std::vector<TestReport> cf_identity_test(const LevyModel& model,
                                         const TimeGrid& grid, std::size_t n_paths,
                                         std::uint64_t seed,
                                         const CfIdentityOptions& options);

// Asymptotic one-sample Kolmogorov-Smirnov test at the given level.
TestReport ks_test(std::vector<double> samples,
                   const std::function<double(double)>& target_cdf,
                   double level = 0.01, const std::string& name = "ks",
                   bool negative_control = false);

double ks_critical_value(std::size_t n, double level);

// Mean / stderr / z of a sample against an exact target (helper shared by
// the experiments; fixed summation order).
TestReport mean_value_test(const std::vector<double>& values, double target,
                           double threshold, const std::string& name);

}  // namespace filtlab
