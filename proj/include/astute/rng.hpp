#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace astute {

// SplitMix64 evaluated in counter mode: the value at counter n is a pure
// function of (seed, n), so independent substreams can be carved out by
// partitioning the counter space. All randomness in the library flows
// through this generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t at(std::uint64_t n) const {
        std::uint64_t z = seed_ + (n + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform_at(std::uint64_t n) const {
        return static_cast<double>(at(n) >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes counters 2n and 2n+1
    double gaussian_at(std::uint64_t n) const {
        const double u1 = (static_cast<double>(at(2 * n) >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform_at(2 * n + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_;
};

// Derives a child seed; used to split one user-facing seed into
// per-purpose or per-index substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return SplitMix64(seed).at(salt);
}

// Stateful sequential view over a SplitMix64 stream.
class SeqRng {
public:
    explicit SeqRng(std::uint64_t seed) : stream_(seed) {}

    std::uint64_t next() { return stream_.at(counter_++); }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double gaussian() {
        const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // unbiased integer in [0, n) by rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

private:
    SplitMix64 stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace astute
