#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hzsl {

/// Bad input: shapes, ranges, malformed files. Maps to CLI exit code 2.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Internal numerical failure: non-convergence, singular operator,
/// non-finite values. Maps to CLI exit code 1.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic random stream used everywhere a seed appears.
/// The double conversions are spelled out so results do not depend on
/// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw validation_error("Rng::index: n must be positive");
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace hzsl
