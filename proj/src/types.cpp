#include "astute/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace astute {

void Dataset::validate() const {
    if (dim < 1) throw std::invalid_argument("Dataset: dim must be >= 1");
    if (labels.empty()) throw std::invalid_argument("Dataset: no samples");
    if (features.size() != labels.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument("Dataset: feature buffer does not match n*dim");
    for (std::size_t i = 0; i < features.size(); ++i)
        if (!std::isfinite(features[i]))
            throw std::invalid_argument("Dataset: non-finite feature at flat index " +
                                        std::to_string(i));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("Dataset: label at row " + std::to_string(i) +
                                        " is not binary");
}

int Mask::popcount() const {
    int c = 0;
    for (auto b : bits) c += b != 0;
    return c;
}

void Mask::validate() const {
    for (auto b : bits)
        if (b > 1) throw std::invalid_argument("Mask: entries must be 0 or 1");
}

void NormOrder::validate() const {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("NormOrder: p must be a finite real >= 1");
}

void PairSamplePlan::validate() const {
    if (!(radius >= 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("PairSamplePlan: radius must be finite and >= 0");
    if (max_pairs < 1) throw std::invalid_argument("PairSamplePlan: max_pairs must be >= 1");
}

}  // namespace astute
