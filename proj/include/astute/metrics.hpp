#pragma once

#include <span>
#include <vector>

#include "astute/types.hpp"

namespace astute {

// p-norm distance ||a - b||_p, p >= 1
double distance(std::span<const double> a, std::span<const double> b, NormOrder ord);
double distance(const Sample& a, const Sample& b, NormOrder ord);

// element-wise product x .* z; the removal semantics shared by all explainers
// (masked-out features are replaced by the zero baseline)
Sample apply_mask(std::span<const double> x, const Mask& z);

// Median of pairwise p-norm distances. All n(n-1)/2 pairs when that count
// fits under max_pairs, otherwise a seeded uniform subsample of max_pairs
// pairs. Even pair counts average the two middle values.
double median_pairwise_distance(const Dataset& data, NormOrder ord,
                                std::uint64_t max_pairs, std::uint64_t seed);

// Unordered sample pairs within plan.radius, sorted by (i, j). Exhaustive
// when the total pair count fits under plan.max_pairs or when the plan says
// so; otherwise draws plan.max_pairs distinct pairs before filtering.
// Throws std::runtime_error when no pair qualifies.
std::vector<SamplePair> sample_pairs(const Dataset& data, const PairSamplePlan& plan,
                                     NormOrder ord);

namespace serial {
// Reference implementations of the OpenMP kernels above; kept for tests and
// the benchmark target. Results are required to match bit-for-bit.
double median_pairwise_distance(const Dataset& data, NormOrder ord,
                                std::uint64_t max_pairs, std::uint64_t seed);
std::vector<SamplePair> sample_pairs(const Dataset& data, const PairSamplePlan& plan,
                                     NormOrder ord);
}  // namespace serial

}  // namespace astute
