#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "astute/model.hpp"
#include "astute/types.hpp"

namespace astute {

enum class ExplainerId { shap, rise, remove_individual };

std::string to_string(ExplainerId id);
ExplainerId explainer_from_string(const std::string& s);

// Wraps the black-box f. Built from a Model it routes batches through the
// blocked forward; built from a plain callable it loops. The wrapped object
// must outlive the Predictor and be safe to call concurrently.
class Predictor {
public:
    using SingleFn = std::function<double(std::span<const double>)>;

    Predictor(SingleFn f);  // implicit: lets plain callables act as predictors
    explicit Predictor(const Model& m);

    double operator()(std::span<const double> x) const { return single_(x); }
    void many(const double* xs, std::size_t n, std::size_t d, double* out) const;

private:
    SingleFn single_;
    std::function<void(const double*, std::size_t, std::size_t, double*)> many_;
};

struct Attribution {
    std::vector<double> scores;
    ExplainerId explainer = ExplainerId::shap;
    int sample_index = -1;
    // meta
    std::uint64_t n_masks = 0;  // model evaluations behind the estimate
    std::uint64_t seed = 0;
    bool exact = true;
    std::vector<double> stderrs;  // per-feature standard errors (sampled modes)
};

struct RiseConfig {
    double inclusion_prob = 0.5;  // per-feature Bernoulli inclusion probability
    int n_masks = 10000;          // sampled mode: masks per feature condition
    bool exact = false;           // enumerate all masks (requires d <= exact_cutoff)
    int exact_cutoff = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

// subset weight |z|! (d-|z|-1)! / d! computed in log space
double shapley_weight(int k, int d);

// exact Shapley attribution of f at x; evaluates f once per mask (2^d total)
Attribution shap_exact(const Predictor& f, std::span<const double> x,
                       int exact_cutoff = 20);

// permutation-sampling estimate for dimensions past the enumeration cutoff
Attribution shap_sampled(const Predictor& f, std::span<const double> x,
                         int n_permutations, std::uint64_t seed);

// phi_i = f(x) - f(x with feature i zeroed); d+1 evaluations
Attribution remove_individual(const Predictor& f, std::span<const double> x);

// phi_i = E[f(x .* z) | z_i = 1] under i.i.d. Bernoulli(inclusion_prob) masks
Attribution rise(const Predictor& f, std::span<const double> x, const RiseConfig& cfg);

struct ExplainerConfig {
    ExplainerId id = ExplainerId::shap;
    bool exact = true;
    int exact_cutoff = 20;
    int n_permutations = 50000;   // shap sampled mode
    int n_masks = 10000;          // rise sampled mode
    double inclusion_prob = 0.5;  // rise
    std::uint64_t seed = 0;
};

// one Attribution per dataset row, ordered by sample index; rows fan out
// across workers with one RNG substream per sample
std::vector<Attribution> explain_dataset(const Predictor& f, const Dataset& data,
                                         const ExplainerConfig& cfg);

namespace serial {
std::vector<Attribution> explain_dataset(const Predictor& f, const Dataset& data,
                                         const ExplainerConfig& cfg);
}

// CSV columns sample_index,explainer,phi_1..phi_d plus a JSON meta sidecar
// at <path>.meta.json
void save_attributions(const std::vector<Attribution>& attrs, const std::string& path,
                       const std::string& extra_meta_json = "");
std::vector<Attribution> load_attributions(const std::string& path);

}  // namespace astute
