#pragma once

#include <vector>

#include "astute/data.hpp"
#include "astute/model.hpp"
#include "astute/rng.hpp"

namespace testutil {

inline astute::MlpModel random_mlp(const std::vector<int>& dims, std::uint64_t seed,
                                   double scale = 1.0) {
    astute::MlpModel m;
    astute::SeqRng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        astute::Matrix W(dims[l + 1], dims[l]);
        for (auto& v : W.a) v = rng.gaussian() * scale / std::sqrt(dims[l]);
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(dims[l + 1], 0.0);
        for (auto& b : m.biases.back()) b = rng.gaussian() * 0.1;
    }
    return m;
}

// two well-separated gaussian blobs, linearly separable with margin
inline astute::Dataset blobs(std::size_t n, std::uint64_t seed) {
    astute::Dataset d;
    d.dim = 2;
    astute::SeqRng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 2);
        const double cx = y ? 2.0 : -2.0;
        d.push_row(std::vector<double>{cx + 0.5 * rng.gaussian(), cx + 0.5 * rng.gaussian()},
                   y);
    }
    return d;
}

}  // namespace testutil
