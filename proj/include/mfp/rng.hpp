#pragma once

#include <cstdint>
#include <random>

namespace mfp {

// Deterministic random source. The engine is the standardized mt19937_64
// stream; all distributions are implemented here rather than with the
// <random> distribution classes, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double strictly inside (0, 1).
    double uniform01_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased. n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling on the top of the 64-bit range
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = next();
        while (v > limit) v = next();
        return v % n;
    }

    /// Standard normal via the inverse CDF applied to uniform01_open.
    double normal() { return normal_icdf(uniform01_open()); }

    /// Inverse standard normal CDF (Acklam's rational approximation,
    /// |relative error| < 1.2e-9). Monotone in p.
    static double normal_icdf(double p);

private:
    std::mt19937_64 eng_;
};

/// Mixes (seed, stream ids) into an independent seed, splitmix64-style.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

} // namespace mfp
