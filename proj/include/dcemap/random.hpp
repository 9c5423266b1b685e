#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dcemap {

/// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so any partition of the counter space reproduces the same stream.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

    /// Derives an independent key for a sub-stream (e.g. one replicate).
    constexpr CounterRng fork(std::uint64_t stream) const {
        CounterRng child(0);
        child.key_ = mix64(key_ ^ mix64(stream + 0x9E3779B97F4A7C15ULL));
        return child;
    }

    constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const {
        return mix64(key_ + mix64(counter * 2 + lane + 1));
    }

    /// Uniform double in (0, 1].
    double uniform(std::uint64_t counter, std::uint64_t lane = 0) const {
        return (static_cast<double>(bits(counter, lane) >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal deviate for `counter` (Box-Muller, cosine branch).
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(counter, 0);
        const double u2 = uniform(counter, 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

}  // namespace dcemap
