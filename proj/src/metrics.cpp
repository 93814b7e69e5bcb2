#include "astute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "astute/parallel.hpp"
#include "astute/rng.hpp"

namespace astute {

double distance(std::span<const double> a, std::span<const double> b, NormOrder ord) {
    ord.validate();
    if (a.size() != b.size())
        throw std::invalid_argument("distance: dimension mismatch");
    const std::size_t d = a.size();
    if (ord.p == 2.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double t = a[i] - b[i];
            s += t * t;
        }
        return std::sqrt(s);
    }
    if (ord.p == 1.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += std::fabs(a[i] - b[i]);
        return s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += std::pow(std::fabs(a[i] - b[i]), ord.p);
    return std::pow(s, 1.0 / ord.p);
}

double distance(const Sample& a, const Sample& b, NormOrder ord) {
    return distance(std::span<const double>(a), std::span<const double>(b), ord);
}

Sample apply_mask(std::span<const double> x, const Mask& z) {
    if (x.size() != z.size())
        throw std::invalid_argument("apply_mask: dimension mismatch");
    z.validate();
    Sample out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * z.bits[i];
    return out;
}

namespace {

inline std::uint64_t pair_count(std::uint64_t n) { return n * (n - 1) / 2; }

// pairs (i, j), i < j, laid out lexicographically; offset(i) is the linear
// index of pair (i, i+1)
inline std::uint64_t pair_offset(std::uint64_t i, std::uint64_t n) {
    return i * (2 * n - i - 1) / 2;
}

std::pair<std::uint32_t, std::uint32_t> decode_pair(std::uint64_t lin, std::uint64_t n) {
    const double nd = static_cast<double>(n);
    double approx = std::floor(nd - 0.5 - std::sqrt((nd - 0.5) * (nd - 0.5) -
                                                    2.0 * static_cast<double>(lin)));
    std::uint64_t i = approx < 0.0 ? 0 : static_cast<std::uint64_t>(approx);
    if (i > n - 2) i = n - 2;
    while (i + 1 < n - 1 && pair_offset(i + 1, n) <= lin) ++i;
    while (i > 0 && pair_offset(i, n) > lin) --i;
    const std::uint64_t j = lin - pair_offset(i, n) + i + 1;
    return {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
}

// Floyd's algorithm: k distinct draws from [0, total), uniform, returned sorted.
std::vector<std::uint64_t> draw_distinct(std::uint64_t total, std::uint64_t k,
                                         std::uint64_t seed) {
    SeqRng rng(mix_seed(seed, 0x70615273u));  // pair-draw substream
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(k) * 2);
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(k));
    for (std::uint64_t t = total - k; t < total; ++t) {
        const std::uint64_t r = rng.below(t + 1);
        if (seen.insert(r).second)
            out.push_back(r);
        else {
            seen.insert(t);
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double median_of(std::vector<double>& v) {
    const std::size_t m = v.size();
    const std::size_t hi = m / 2;
    std::nth_element(v.begin(), v.begin() + hi, v.end());
    const double upper = v[hi];
    if (m % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + hi);
    return 0.5 * (lower + upper);
}

struct PairSelection {
    bool exhaustive = false;
    std::vector<std::uint64_t> linear;  // sampled mode only, sorted
};

PairSelection select_pairs(std::uint64_t n, std::uint64_t max_pairs, std::uint64_t seed,
                           bool force_exhaustive) {
    PairSelection sel;
    const std::uint64_t total = pair_count(n);
    if (force_exhaustive || total <= max_pairs) {
        sel.exhaustive = true;
        return sel;
    }
    sel.linear = draw_distinct(total, max_pairs, seed);
    return sel;
}

}  // namespace

double median_pairwise_distance(const Dataset& data, NormOrder ord,
                                std::uint64_t max_pairs, std::uint64_t seed) {
    data.validate();
    ord.validate();
    if (data.size() < 2)
        throw std::invalid_argument("median_pairwise_distance: need at least 2 samples");
    if (max_pairs < 1)
        throw std::invalid_argument("median_pairwise_distance: max_pairs must be >= 1");

    const std::uint64_t n = data.size();
    const auto sel = select_pairs(n, max_pairs, seed, false);

    std::vector<double> dists;
    if (sel.exhaustive) {
        dists.resize(pair_count(n));
#pragma omp parallel for schedule(dynamic, 16) num_threads(max_jobs())
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) - 1; ++i) {
            const std::uint64_t base = pair_offset(i, n);
            for (std::uint64_t j = i + 1; j < n; ++j)
                dists[base + (j - i - 1)] = distance(data.row(i), data.row(j), ord);
        }
    } else {
        dists.resize(sel.linear.size());
#pragma omp parallel for schedule(static) num_threads(max_jobs())
        for (std::int64_t t = 0; t < static_cast<std::int64_t>(sel.linear.size()); ++t) {
            const auto [i, j] = decode_pair(sel.linear[t], n);
            dists[t] = distance(data.row(i), data.row(j), ord);
        }
    }
    return median_of(dists);
}

std::vector<SamplePair> sample_pairs(const Dataset& data, const PairSamplePlan& plan,
                                     NormOrder ord) {
    data.validate();
    plan.validate();
    ord.validate();
    if (data.size() < 2)
        throw std::invalid_argument("sample_pairs: need at least 2 samples");

    const std::uint64_t n = data.size();
    const auto sel = select_pairs(n, plan.max_pairs, plan.seed,
                                  plan.mode == PairMode::exhaustive);

    std::vector<SamplePair> out;
    if (sel.exhaustive) {
#pragma omp parallel num_threads(max_jobs())
        {
            std::vector<SamplePair> local;
#pragma omp for schedule(dynamic, 16) nowait
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) - 1; ++i) {
                for (std::uint64_t j = i + 1; j < n; ++j) {
                    const double d = distance(data.row(i), data.row(j), ord);
                    if (d <= plan.radius)
                        local.push_back({static_cast<std::uint32_t>(i),
                                         static_cast<std::uint32_t>(j), d});
                }
            }
#pragma omp critical
            out.insert(out.end(), local.begin(), local.end());
        }
    } else {
        const std::int64_t k = static_cast<std::int64_t>(sel.linear.size());
        std::vector<SamplePair> cand(k);
        std::vector<std::uint8_t> keep(k, 0);
#pragma omp parallel for schedule(static) num_threads(max_jobs())
        for (std::int64_t t = 0; t < k; ++t) {
            const auto [i, j] = decode_pair(sel.linear[t], n);
            const double d = distance(data.row(i), data.row(j), ord);
            cand[t] = {i, j, d};
            keep[t] = d <= plan.radius;
        }
        for (std::int64_t t = 0; t < k; ++t)
            if (keep[t]) out.push_back(cand[t]);
    }

    std::sort(out.begin(), out.end(), [](const SamplePair& a, const SamplePair& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    if (out.empty())
        throw std::runtime_error("sample_pairs: no qualifying pairs; radius too small for this dataset");
    return out;
}

namespace serial {

double median_pairwise_distance(const Dataset& data, NormOrder ord,
                                std::uint64_t max_pairs, std::uint64_t seed) {
    data.validate();
    ord.validate();
    if (data.size() < 2)
        throw std::invalid_argument("median_pairwise_distance: need at least 2 samples");
    if (max_pairs < 1)
        throw std::invalid_argument("median_pairwise_distance: max_pairs must be >= 1");

    const std::uint64_t n = data.size();
    const auto sel = select_pairs(n, max_pairs, seed, false);

    std::vector<double> dists;
    if (sel.exhaustive) {
        dists.reserve(pair_count(n));
        for (std::uint64_t i = 0; i + 1 < n; ++i)
            for (std::uint64_t j = i + 1; j < n; ++j)
                dists.push_back(distance(data.row(i), data.row(j), ord));
    } else {
        dists.reserve(sel.linear.size());
        for (const auto lin : sel.linear) {
            const auto [i, j] = decode_pair(lin, n);
            dists.push_back(distance(data.row(i), data.row(j), ord));
        }
    }
    return median_of(dists);
}

std::vector<SamplePair> sample_pairs(const Dataset& data, const PairSamplePlan& plan,
                                     NormOrder ord) {
    data.validate();
    plan.validate();
    ord.validate();
    if (data.size() < 2)
        throw std::invalid_argument("sample_pairs: need at least 2 samples");

    const std::uint64_t n = data.size();
    const auto sel = select_pairs(n, plan.max_pairs, plan.seed,
                                  plan.mode == PairMode::exhaustive);

    std::vector<SamplePair> out;
    if (sel.exhaustive) {
        for (std::uint64_t i = 0; i + 1 < n; ++i)
            for (std::uint64_t j = i + 1; j < n; ++j) {
                const double d = distance(data.row(i), data.row(j), ord);
                if (d <= plan.radius)
                    out.push_back({static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(j), d});
            }
    } else {
        for (const auto lin : sel.linear) {
            const auto [i, j] = decode_pair(lin, n);
            const double d = distance(data.row(i), data.row(j), ord);
            if (d <= plan.radius) out.push_back({i, j, d});
        }
    }
    if (out.empty())
        throw std::runtime_error("sample_pairs: no qualifying pairs; radius too small for this dataset");
    return out;
}

}  // namespace serial

}  // namespace astute
