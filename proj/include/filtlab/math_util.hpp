#pragma once

#include <cmath>
#include <functional>

namespace filtlab {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.141592653589793238462643383280);
}

// P{tau <= t} for the first hit of -1 by standard Brownian motion.
inline double hitting_time_cdf_unit(double t) {
    if (!(t > 0.0)) return 0.0;
    return std::erfc(1.0 / std::sqrt(2.0 * t));
}

inline double poisson_pmf(long long k, double mean) {
    if (k < 0) return 0.0;
    return std::exp(-mean + static_cast<double>(k) * std::log(mean) -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

// Adaptive Simpson quadrature.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 24);

}  // namespace filtlab
