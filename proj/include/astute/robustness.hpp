#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "astute/explain.hpp"
#include "astute/metrics.hpp"
#include "astute/model.hpp"
#include "astute/types.hpp"

namespace astute {

enum class CurveKind { lipschitzness, astuteness, predicted_bound };

std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& s);

// A grid of L (lipschitzness) or lambda (astuteness / bound) values mapped
// to probabilities.
struct RobustnessCurve {
    CurveKind kind = CurveKind::lipschitzness;
    std::vector<double> grid;    // strictly ascending
    std::vector<double> values;  // in [0, 1]
    double radius = 0.0;
    double norm_p = 2.0;
    std::int64_t n_pairs = 0;
    int dim = 0;
    std::string subject_id;

    void validate() const;
};

// explainer constant C in the bound lambda = C * L * d^(1/p)
struct BoundSpec {
    double C = 2.0;  // 2 for shap and remove_individual, 1 for rise
    int dim = 0;
    NormOrder norm_order{2.0};

    void validate() const;
};

double explainer_constant(ExplainerId id);

std::vector<double> make_grid(double lo, double hi, double step);

// P[|f(x)-f(x')| <= L * d_p(x,x') | d_p <= r] for each L; zero-distance pairs
// always count as satisfied
RobustnessCurve estimate_plipschitz(const Predictor& f, const Dataset& data,
                                    const PairSamplePlan& plan, NormOrder ord,
                                    const std::vector<double>& L_grid,
                                    const std::string& subject_id = "");

// P[d_p(phi(x), phi(x')) <= lambda * d_p(x,x') | d_p <= r] for each lambda
RobustnessCurve estimate_astuteness(const std::vector<Attribution>& attrs,
                                    const Dataset& data, const PairSamplePlan& plan,
                                    NormOrder ord, const std::vector<double>& lambda_grid,
                                    const std::string& subject_id = "");

// Step-function lower envelope implied by the lipschitzness profile: at each
// lambda, the largest profile value whose C*L*d^(1/p) fits under lambda.
RobustnessCurve predict_bound(const RobustnessCurve& profile, const BoundSpec& spec,
                              const std::vector<double>& lambda_grid,
                              const std::string& subject_id = "");

// normalized trapezoidal area over [lambda_min, lambda_max], with constant
// extrapolation beyond the grid ends
double auc(const RobustnessCurve& curve, double lambda_min, double lambda_max);

double auc_gap(const RobustnessCurve& emp, const RobustnessCurve& pred,
               double lambda_min, double lambda_max);

// Worst-case probability of Lipschitz violation among masked points: maximize
// sum_k 2^-k p_k g_k / sum_j 2^-j p_j subject to sum_k p_k g_k = alpha,
// 0 <= g_k <= 1. p_vec[k-1] holds the mass of points with exactly k nonzero
// coordinates.
struct BetaStarProblem {
    std::vector<double> p_vec;
    double alpha = 0.0;

    void validate() const;
};

struct BetaStarResult {
    double beta = 0.0;
    std::vector<double> gamma;
};

// fractional-knapsack greedy in descending value density 2^-k (ascending k)
BetaStarResult beta_star(const BetaStarProblem& prob);

// independent brute-force verifier: grid search over gamma in [0,1]^d keeping
// points with |sum p_k g_k - alpha| <= resolution * max(p); d <= 4
double beta_star_oracle(const BetaStarProblem& prob, double resolution);

struct BoundReport {
    std::int64_t violations = 0;
    double max_ratio = 0.0;  // max over pairs of d_p(phi, phi') / d_p(x, x')
    double bound = 0.0;      // C * L * d^(1/p)
    double lipschitz_upper = 0.0;
    double constant = 0.0;
    std::int64_t n_pairs = 0;
};

// Checks the deterministic astuteness guarantee lambda = C*L*d^(1/p) for a
// model with a known Lipschitz upper bound, using exact explainer modes over
// all qualifying pairs. Expected violations: zero.
BoundReport verify_bound(ExplainerId id, const Model& model, const Dataset& data,
                           const PairSamplePlan& plan, NormOrder ord,
                           double rise_inclusion_prob = 0.5);

namespace serial {
RobustnessCurve estimate_plipschitz(const Predictor& f, const Dataset& data,
                                    const PairSamplePlan& plan, NormOrder ord,
                                    const std::vector<double>& L_grid,
                                    const std::string& subject_id = "");
RobustnessCurve estimate_astuteness(const std::vector<Attribution>& attrs,
                                    const Dataset& data, const PairSamplePlan& plan,
                                    NormOrder ord, const std::vector<double>& lambda_grid,
                                    const std::string& subject_id = "");
}  // namespace serial

// CSV columns grid_value,probability plus a JSON sidecar <path>.meta.json
void save_curve(const RobustnessCurve& curve, const std::string& path,
                const std::string& extra_meta_json = "");
RobustnessCurve load_curve(const std::string& path);

std::string report_to_json(const BoundReport& r, ExplainerId id);

}  // namespace astute
