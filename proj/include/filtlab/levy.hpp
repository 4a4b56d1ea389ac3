#pragma once

#include <complex>
#include <stdexcept>

namespace filtlab {

// Jump-size law for compound Poisson models.
struct JumpLaw {
    enum class Kind { Normal, Constant };
    Kind kind = Kind::Normal;
    double mu = 0.0;     // normal mean
    double sigma = 1.0;  // normal stdev
    double c = 1.0;      // constant jump size

    std::complex<double> char_fn(double theta) const {
        const std::complex<double> i(0.0, 1.0);
        switch (kind) {
            case Kind::Normal:
                return std::exp(i * (mu * theta) - 0.5 * sigma * sigma * theta * theta);
            case Kind::Constant:
                return std::exp(i * (c * theta));
        }
        throw std::invalid_argument("JumpLaw: unknown kind");
    }
};

// Levy model with characteristic exponent psi: E[exp(i theta Z_t)] = exp(t psi(theta)).
struct LevyModel {
    enum class Kind { Brownian, Poisson, CompoundPoisson, BrownianWithDrift };

    static LevyModel brownian() { return {Kind::Brownian, 0.0, 0.0, {}}; }
    static LevyModel poisson(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("LevyModel: rate must be positive");
        return {Kind::Poisson, rate, 0.0, {}};
    }
    static LevyModel compound_poisson(double rate, JumpLaw law) {
        if (!(rate > 0.0)) throw std::invalid_argument("LevyModel: rate must be positive");
        return {Kind::CompoundPoisson, rate, 0.0, law};
    }
    static LevyModel brownian_with_drift(double mu) {
        return {Kind::BrownianWithDrift, 0.0, mu, {}};
    }

    std::complex<double> exponent(double theta) const {
        const std::complex<double> i(0.0, 1.0);
        switch (kind) {
            case Kind::Brownian:
                return {-0.5 * theta * theta, 0.0};
            case Kind::Poisson:
                return rate * (std::exp(i * theta) - 1.0);
            case Kind::CompoundPoisson:
                return rate * (jump_law.char_fn(theta) - 1.0);
            case Kind::BrownianWithDrift:
                return i * (drift * theta) - 0.5 * theta * theta;
        }
        throw std::invalid_argument("LevyModel: unknown kind");
    }

    Kind kind = Kind::Brownian;
    double rate = 0.0;   // jump intensity
    double drift = 0.0;  // Brownian drift
    JumpLaw jump_law;
};

}  // namespace filtlab
