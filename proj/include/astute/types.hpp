#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace astute {

using Sample = std::vector<double>;

// n samples of fixed dimension with binary labels, stored row-major.
struct Dataset {
    int dim = 0;
    std::vector<double> features;  // size() * dim, row-major
    std::vector<int> labels;       // values in {0, 1}

    std::size_t size() const { return labels.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }

    void push_row(std::span<const double> x, int label) {
        features.insert(features.end(), x.begin(), x.end());
        labels.push_back(label);
    }

    // throws std::invalid_argument on shape mismatch, non-binary labels or
    // non-finite features
    void validate() const;
};

// binary feature-selection vector z, entries exactly 0 or 1
struct Mask {
    std::vector<std::uint8_t> bits;

    explicit Mask(std::size_t d = 0, std::uint8_t fill = 1) : bits(d, fill) {}

    std::size_t size() const { return bits.size(); }
    int popcount() const;
    void validate() const;
};

struct NormOrder {
    double p = 2.0;  // p >= 1

    void validate() const;
};

enum class PairMode { exhaustive, sampled };

// How to draw sample pairs for the conditional probability estimates:
// keep pairs at distance <= radius, enumerating everything when the pair
// count fits under max_pairs and falling back to uniform sampling without
// replacement otherwise.
struct PairSamplePlan {
    double radius = 0.0;
    std::uint64_t max_pairs = 200000;
    std::uint64_t seed = 0;
    PairMode mode = PairMode::sampled;

    void validate() const;
};

struct SamplePair {
    std::uint32_t i = 0;
    std::uint32_t j = 0;  // i < j
    double distance = 0.0;

    friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

}  // namespace astute
