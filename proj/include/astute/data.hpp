#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "astute/types.hpp"

namespace astute {

enum class GeneratorKind { orange_skin, nonlinear_additive, switch_mixture };

std::string to_string(GeneratorKind k);
GeneratorKind generator_kind_from_string(const std::string& s);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::orange_skin;
    std::uint64_t n = 0;
    int dim = 10;
    std::uint64_t seed = 0;

    void validate() const;  // orange_skin/nonlinear_additive: dim >= 4; switch: dim >= 10
};

// Ground-truth logits behind the class probabilities. The label is drawn
// with probability sigmoid(score).
double orange_skin_score(std::span<const double> x);
double nonlinear_additive_score(std::span<const double> x);
// high_component selects which feature block drives the label: the +3
// mixture component routes through x[1..4] (orange-skin rule), the -3
// component through x[5..8] (nonlinear-additive rule).
double switch_score(std::span<const double> x, bool high_component);

double sigmoid(double v);

Dataset generate(const GeneratorSpec& spec);

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // sample std (n-1 denominator)
};

FeatureStats compute_stats(const Dataset& data);
// z-score each feature column in place; columns with zero spread are only centered
void apply_stats(Dataset& data, const FeatureStats& stats);

// CSV ingestion: comma separated, first row header, '.' decimal separator,
// binary label column addressed by name or 0-based index.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool standardize);

// Persists in the same schema load_csv reads (features f1..fd then the label
// column) plus a JSON sidecar <path minus .csv>.spec.json when a spec is given.
void save_csv(const Dataset& data, const std::string& path,
              const GeneratorSpec* spec = nullptr);

// deterministic shuffled split; test gets round(n * test_fraction) samples
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

}  // namespace astute
