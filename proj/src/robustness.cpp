#include "astute/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "astute/io.hpp"
#include "astute/parallel.hpp"

namespace astute {

std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::lipschitzness: return "lipschitzness";
        case CurveKind::astuteness: return "astuteness";
        case CurveKind::predicted_bound: return "predicted_bound";
    }
    return "?";
}

CurveKind curve_kind_from_string(const std::string& s) {
    if (s == "lipschitzness") return CurveKind::lipschitzness;
    if (s == "astuteness") return CurveKind::astuteness;
    if (s == "predicted_bound") return CurveKind::predicted_bound;
    throw std::invalid_argument("unknown curve kind: " + s);
}

void RobustnessCurve::validate() const {
    if (grid.empty()) throw std::invalid_argument("RobustnessCurve: empty grid");
    if (grid.size() != values.size())
        throw std::invalid_argument("RobustnessCurve: grid/values size mismatch");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("RobustnessCurve: grid must be strictly ascending");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("RobustnessCurve: values must lie in [0,1]");
}

void BoundSpec::validate() const {
    if (C != 1.0 && C != 2.0)
        throw std::invalid_argument("BoundSpec: C must be 1 (rise) or 2 (shap/remove_individual)");
    if (dim < 1) throw std::invalid_argument("BoundSpec: dim must be >= 1");
    norm_order.validate();
}

double explainer_constant(ExplainerId id) {
    return id == ExplainerId::rise ? 1.0 : 2.0;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo))
        throw std::invalid_argument("make_grid: need step > 0 and hi >= lo");
    const int count = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> g(count);
    for (int t = 0; t < count; ++t) g[t] = lo + t * step;
    return g;
}

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty parameter grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("parameter grid must be strictly ascending");
}

// Counts, per grid value g, the pairs with diff <= g * dist. Pairs at
// distance exactly zero always satisfy the predicate.
RobustnessCurve count_curve(CurveKind kind, const std::vector<SamplePair>& pairs,
                            const std::vector<double>& diffs,
                            const std::vector<double>& grid, double radius,
                            double norm_p, int dim, const std::string& subject_id,
                            bool parallel) {
    const std::size_t G = grid.size();
    std::vector<std::int64_t> counts(G, 0);

    if (parallel) {
#pragma omp parallel num_threads(max_jobs())
        {
            std::vector<std::int64_t> local(G, 0);
#pragma omp for schedule(static) nowait
            for (std::int64_t t = 0; t < static_cast<std::int64_t>(pairs.size()); ++t) {
                const double dist = pairs[t].distance;
                for (std::size_t g = 0; g < G; ++g)
                    if (dist == 0.0 || diffs[t] <= grid[g] * dist) ++local[g];
            }
#pragma omp critical
            for (std::size_t g = 0; g < G; ++g) counts[g] += local[g];
        }
    } else {
        for (std::size_t t = 0; t < pairs.size(); ++t) {
            const double dist = pairs[t].distance;
            for (std::size_t g = 0; g < G; ++g)
                if (dist == 0.0 || diffs[t] <= grid[g] * dist) ++counts[g];
        }
    }

    RobustnessCurve curve;
    curve.kind = kind;
    curve.grid = grid;
    curve.values.resize(G);
    for (std::size_t g = 0; g < G; ++g)
        curve.values[g] = static_cast<double>(counts[g]) / static_cast<double>(pairs.size());
    curve.radius = radius;
    curve.norm_p = norm_p;
    curve.n_pairs = static_cast<std::int64_t>(pairs.size());
    curve.dim = dim;
    curve.subject_id = subject_id;
    curve.validate();
    return curve;
}

std::vector<double> prediction_diffs(const Predictor& f, const Dataset& data,
                                     const std::vector<SamplePair>& pairs, bool parallel) {
    const std::size_t n = data.size();
    std::vector<double> fx(n);
    if (parallel) {
        const std::size_t chunk = 128;
#pragma omp parallel for schedule(dynamic) num_threads(max_jobs())
        for (std::int64_t c = 0; c < static_cast<std::int64_t>((n + chunk - 1) / chunk); ++c) {
            const std::size_t lo = c * chunk;
            const std::size_t len = std::min(chunk, n - lo);
            f.many(data.features.data() + lo * data.dim, len, data.dim, fx.data() + lo);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) fx[i] = f(data.row(i));
    }
    std::vector<double> diffs(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t)
        diffs[t] = std::fabs(fx[pairs[t].i] - fx[pairs[t].j]);
    return diffs;
}

std::vector<double> attribution_diffs(const std::vector<Attribution>& attrs,
                                      const Dataset& data,
                                      const std::vector<SamplePair>& pairs, NormOrder ord,
                                      bool parallel) {
    std::vector<std::int64_t> pos(data.size(), -1);
    for (std::size_t k = 0; k < attrs.size(); ++k) {
        const int idx = attrs[k].sample_index;
        if (idx >= 0 && static_cast<std::size_t>(idx) < pos.size())
            pos[idx] = static_cast<std::int64_t>(k);
    }
    for (const auto& pr : pairs) {
        if (pos[pr.i] < 0)
            throw std::invalid_argument("estimate_astuteness: missing attribution for sample index " +
                                        std::to_string(pr.i));
        if (pos[pr.j] < 0)
            throw std::invalid_argument("estimate_astuteness: missing attribution for sample index " +
                                        std::to_string(pr.j));
    }

    std::vector<double> diffs(pairs.size());
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(max_jobs())
        for (std::int64_t t = 0; t < static_cast<std::int64_t>(pairs.size()); ++t)
            diffs[t] = distance(attrs[pos[pairs[t].i]].scores,
                                attrs[pos[pairs[t].j]].scores, ord);
    } else {
        for (std::size_t t = 0; t < pairs.size(); ++t)
            diffs[t] = distance(attrs[pos[pairs[t].i]].scores,
                                attrs[pos[pairs[t].j]].scores, ord);
    }
    return diffs;
}

RobustnessCurve plipschitz_impl(const Predictor& f, const Dataset& data,
                                const PairSamplePlan& plan, NormOrder ord,
                                const std::vector<double>& grid,
                                const std::string& subject_id, bool parallel) {
    check_grid(grid);
    const auto pairs = parallel ? sample_pairs(data, plan, ord)
                                : serial::sample_pairs(data, plan, ord);
    const auto diffs = prediction_diffs(f, data, pairs, parallel);
    return count_curve(CurveKind::lipschitzness, pairs, diffs, grid, plan.radius, ord.p,
                       data.dim, subject_id, parallel);
}

RobustnessCurve astuteness_impl(const std::vector<Attribution>& attrs, const Dataset& data,
                                const PairSamplePlan& plan, NormOrder ord,
                                const std::vector<double>& grid,
                                const std::string& subject_id, bool parallel) {
    check_grid(grid);
    const auto pairs = parallel ? sample_pairs(data, plan, ord)
                                : serial::sample_pairs(data, plan, ord);
    const auto diffs = attribution_diffs(attrs, data, pairs, ord, parallel);
    return count_curve(CurveKind::astuteness, pairs, diffs, grid, plan.radius, ord.p,
                       data.dim, subject_id, parallel);
}

}  // namespace

RobustnessCurve estimate_plipschitz(const Predictor& f, const Dataset& data,
                                    const PairSamplePlan& plan, NormOrder ord,
                                    const std::vector<double>& L_grid,
                                    const std::string& subject_id) {
    return plipschitz_impl(f, data, plan, ord, L_grid, subject_id, true);
}

RobustnessCurve estimate_astuteness(const std::vector<Attribution>& attrs,
                                    const Dataset& data, const PairSamplePlan& plan,
                                    NormOrder ord, const std::vector<double>& lambda_grid,
                                    const std::string& subject_id) {
    return astuteness_impl(attrs, data, plan, ord, lambda_grid, subject_id, true);
}

namespace serial {
RobustnessCurve estimate_plipschitz(const Predictor& f, const Dataset& data,
                                    const PairSamplePlan& plan, NormOrder ord,
                                    const std::vector<double>& L_grid,
                                    const std::string& subject_id) {
    return plipschitz_impl(f, data, plan, ord, L_grid, subject_id, false);
}

RobustnessCurve estimate_astuteness(const std::vector<Attribution>& attrs,
                                    const Dataset& data, const PairSamplePlan& plan,
                                    NormOrder ord, const std::vector<double>& lambda_grid,
                                    const std::string& subject_id) {
    return astuteness_impl(attrs, data, plan, ord, lambda_grid, subject_id, false);
}
}  // namespace serial

RobustnessCurve predict_bound(const RobustnessCurve& profile, const BoundSpec& spec,
                              const std::vector<double>& lambda_grid,
                              const std::string& subject_id) {
    profile.validate();
    spec.validate();
    check_grid(lambda_grid);
    if (profile.kind != CurveKind::lipschitzness)
        throw std::invalid_argument("predict_bound: profile must be a lipschitzness curve");

    const double factor =
        spec.C * std::pow(static_cast<double>(spec.dim), 1.0 / spec.norm_order.p);

    RobustnessCurve out;
    out.kind = CurveKind::predicted_bound;
    out.grid = lambda_grid;
    out.values.resize(lambda_grid.size());
    for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
        double best = 0.0;
        for (std::size_t t = 0; t < profile.grid.size(); ++t)
            if (factor * profile.grid[t] <= lambda_grid[g])
                best = std::max(best, profile.values[t]);
        out.values[g] = best;
    }
    out.radius = profile.radius;
    out.norm_p = profile.norm_p;
    out.n_pairs = profile.n_pairs;
    out.dim = spec.dim;
    out.subject_id = subject_id.empty() ? profile.subject_id : subject_id;
    out.validate();
    return out;
}

namespace {
double curve_value_at(const RobustnessCurve& c, double t) {
    if (t <= c.grid.front()) return c.values.front();
    if (t >= c.grid.back()) return c.values.back();
    const auto it = std::upper_bound(c.grid.begin(), c.grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - c.grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - c.grid[lo]) / (c.grid[hi] - c.grid[lo]);
    return c.values[lo] * (1.0 - w) + c.values[hi] * w;
}
}  // namespace

double auc(const RobustnessCurve& curve, double lambda_min, double lambda_max) {
    curve.validate();
    if (!(lambda_min < lambda_max))
        throw std::invalid_argument("auc: degenerate interval");

    std::vector<double> knots{lambda_min};
    for (double g : curve.grid)
        if (g > lambda_min && g < lambda_max) knots.push_back(g);
    knots.push_back(lambda_max);

    double integral = 0.0;
    for (std::size_t t = 1; t < knots.size(); ++t) {
        const double v0 = curve_value_at(curve, knots[t - 1]);
        const double v1 = curve_value_at(curve, knots[t]);
        integral += (knots[t] - knots[t - 1]) * 0.5 * (v0 + v1);
    }
    return integral / (lambda_max - lambda_min);
}

double auc_gap(const RobustnessCurve& emp, const RobustnessCurve& pred,
               double lambda_min, double lambda_max) {
    return auc(emp, lambda_min, lambda_max) - auc(pred, lambda_min, lambda_max);
}

void BetaStarProblem::validate() const {
    if (p_vec.empty()) throw std::invalid_argument("BetaStarProblem: empty p vector");
    double total = 0.0;
    for (double p : p_vec) {
        if (!(p >= 0.0)) throw std::invalid_argument("BetaStarProblem: p entries must be >= 0");
        total += p;
    }
    if (total > 1.0 + 1e-9)
        throw std::invalid_argument("BetaStarProblem: sum of p must be <= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("BetaStarProblem: alpha must be in [0,1]");
    if (alpha > total + 1e-12)
        throw std::invalid_argument("BetaStarProblem: infeasible, alpha exceeds sum of p");
}

BetaStarResult beta_star(const BetaStarProblem& prob) {
    prob.validate();
    const std::size_t d = prob.p_vec.size();

    double denom = 0.0;
    for (std::size_t k = 0; k < d; ++k)
        denom += std::ldexp(prob.p_vec[k], -static_cast<int>(k) - 1);

    BetaStarResult res;
    res.gamma.assign(d, 0.0);

    // value density of gamma_k per unit of budget is 2^-(k+1), so spend the
    // budget in ascending k; the pivot index gets the fractional remainder
    double remaining = prob.alpha;
    double numer = 0.0;
    for (std::size_t k = 0; k < d && remaining > 0.0; ++k) {
        if (prob.p_vec[k] <= 0.0) continue;
        const double take = std::min(1.0, remaining / prob.p_vec[k]);
        res.gamma[k] = take;
        remaining -= take * prob.p_vec[k];
        numer += std::ldexp(prob.p_vec[k] * take, -static_cast<int>(k) - 1);
    }
    res.beta = denom > 0.0 ? std::clamp(numer / denom, 0.0, 1.0) : 0.0;
    return res;
}

namespace {

struct OracleCtx {
    const std::vector<double>* p;
    double alpha;
    double tau;
    int m;  // grid steps, gamma = t / m
    double denom;
};

// Best objective for a fixed prefix; the last coordinate is resolved
// analytically: its objective coefficient is nonnegative, so within the
// feasible band the topmost grid point wins. Grid points may undershoot the
// budget by up to tau but never overshoot it, which keeps alpha = 0 exact.
bool best_with_prefix(const OracleCtx& ctx, double prefix_budget, double prefix_numer,
                      double& out) {
    const std::size_t d = ctx.p->size();
    const double pl = (*ctx.p)[d - 1];
    const double coef = std::ldexp(pl, -static_cast<int>(d));
    const double slack = 1e-12 * std::max(1.0, ctx.alpha);
    if (pl <= 0.0) {
        if (prefix_budget > ctx.alpha + slack || prefix_budget < ctx.alpha - ctx.tau)
            return false;
        out = ctx.denom > 0.0 ? prefix_numer / ctx.denom : 0.0;
        return true;
    }
    const double hi = (ctx.alpha - prefix_budget) / pl;
    int t = static_cast<int>(std::floor(hi * ctx.m + 1e-9));
    t = std::min(t, ctx.m);
    while (t >= 0 &&
           prefix_budget + pl * (static_cast<double>(t) / ctx.m) > ctx.alpha + slack)
        --t;
    if (t < 0) return false;
    const double g = static_cast<double>(t) / ctx.m;
    if (prefix_budget + pl * g < ctx.alpha - ctx.tau) return false;
    out = ctx.denom > 0.0 ? (prefix_numer + coef * g) / ctx.denom : 0.0;
    return true;
}

bool oracle_recurse(const OracleCtx& ctx, std::size_t dim, double budget, double numer,
                    double& best) {
    const std::size_t d = ctx.p->size();
    if (dim == d - 1) {
        double v = 0.0;
        if (!best_with_prefix(ctx, budget, numer, v)) return false;
        best = std::max(best, v);
        return true;
    }
    const double pk = (*ctx.p)[dim];
    const double coef = std::ldexp(pk, -static_cast<int>(dim) - 1);
    bool any = false;
    for (int t = 0; t <= ctx.m; ++t) {
        const double g = static_cast<double>(t) / ctx.m;
        if (oracle_recurse(ctx, dim + 1, budget + pk * g, numer + coef * g, best))
            any = true;
    }
    return any;
}

}  // namespace

double beta_star_oracle(const BetaStarProblem& prob, double resolution) {
    prob.validate();
    if (!(resolution > 0.0 && resolution <= 1.0))
        throw std::invalid_argument("beta_star_oracle: resolution must be in (0,1]");
    const std::size_t d = prob.p_vec.size();
    if (d > 4) throw std::invalid_argument("beta_star_oracle: d must be <= 4");

    OracleCtx ctx;
    ctx.p = &prob.p_vec;
    ctx.alpha = prob.alpha;
    ctx.m = static_cast<int>(std::lround(1.0 / resolution));
    double pmax = 0.0;
    for (double p : prob.p_vec) pmax = std::max(pmax, p);
    ctx.tau = resolution * pmax;
    ctx.denom = 0.0;
    for (std::size_t k = 0; k < d; ++k)
        ctx.denom += std::ldexp(prob.p_vec[k], -static_cast<int>(k) - 1);

    double best = -1.0;
    bool any = false;

    if (d == 1) {
        double v = 0.0;
        any = best_with_prefix(ctx, 0.0, 0.0, v);
        if (any) best = v;
    } else {
        const double p0 = prob.p_vec[0];
        const double coef0 = std::ldexp(p0, -1);
        std::int64_t found = 0;
#pragma omp parallel for schedule(static) reduction(max : best) reduction(+ : found) \
    num_threads(max_jobs())
        for (int t = 0; t <= ctx.m; ++t) {
            const double g = static_cast<double>(t) / ctx.m;
            double local = -1.0;
            if (oracle_recurse(ctx, 1, p0 * g, coef0 * g, local)) {
                ++found;
                best = std::max(best, local);
            }
        }
        any = found > 0;
    }

    if (!any)
        throw std::runtime_error("beta_star_oracle: no feasible grid point at this resolution");
    return best;
}

BoundReport verify_bound(ExplainerId id, const Model& model, const Dataset& data,
                           const PairSamplePlan& plan, NormOrder ord,
                           double rise_inclusion_prob) {
    data.validate();
    const auto L = known_lipschitz_upper(model, ord);
    if (!L)
        throw std::invalid_argument(
            "verify_bound: predictor has no known Lipschitz upper bound");

    ExplainerConfig cfg;
    cfg.id = id;
    cfg.exact = true;
    cfg.exact_cutoff = data.dim;  // exact mode is mandatory here
    cfg.inclusion_prob = rise_inclusion_prob;
    const Predictor f(model);
    const auto attrs = explain_dataset(f, data, cfg);

    const auto pairs = sample_pairs(data, plan, ord);

    BoundReport rep;
    rep.constant = explainer_constant(id);
    rep.lipschitz_upper = *L;
    rep.bound = rep.constant * *L * std::pow(static_cast<double>(data.dim), 1.0 / ord.p);
    rep.n_pairs = static_cast<std::int64_t>(pairs.size());

    double max_ratio = 0.0;
    std::int64_t violations = 0;
#pragma omp parallel for schedule(static) reduction(max : max_ratio) \
    reduction(+ : violations) num_threads(max_jobs())
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(pairs.size()); ++t) {
        const auto& pr = pairs[t];
        const double dphi = distance(attrs[pr.i].scores, attrs[pr.j].scores, ord);
        if (pr.distance > 0.0) {
            max_ratio = std::max(max_ratio, dphi / pr.distance);
            if (dphi > rep.bound * pr.distance) ++violations;
        } else if (dphi > 0.0) {
            ++violations;
        }
    }
    rep.max_ratio = max_ratio;
    rep.violations = violations;
    return rep;
}

void save_curve(const RobustnessCurve& curve, const std::string& path,
                const std::string& extra_meta_json) {
    curve.validate();
    std::string body = "grid_value,probability\n";
    for (std::size_t t = 0; t < curve.grid.size(); ++t)
        body += fmt_double(curve.grid[t]) + "," + fmt_double(curve.values[t]) + "\n";
    write_text_atomic(path, body);

    nlohmann::json meta{{"kind", to_string(curve.kind)},
                        {"radius", curve.radius},
                        {"norm_p", curve.norm_p},
                        {"n_pairs", curve.n_pairs},
                        {"dim", curve.dim},
                        {"subject_id", curve.subject_id}};
    if (!extra_meta_json.empty()) {
        const auto extra = nlohmann::json::parse(extra_meta_json);
        for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    }
    write_text_atomic(path + ".meta.json", meta.dump(2) + "\n");
}

RobustnessCurve load_curve(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("load_curve: empty file " + path);
    RobustnessCurve curve;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2)
            throw std::invalid_argument("load_curve: bad row " + std::to_string(lineno));
        bool ok1 = false, ok2 = false;
        curve.grid.push_back(parse_double_strict(cells[0], ok1));
        curve.values.push_back(parse_double_strict(cells[1], ok2));
        if (!ok1 || !ok2)
            throw std::invalid_argument("load_curve: non-numeric row " + std::to_string(lineno));
    }

    const auto meta = nlohmann::json::parse(read_text(path + ".meta.json"));
    curve.kind = curve_kind_from_string(meta.at("kind").get<std::string>());
    curve.radius = meta.value("radius", 0.0);
    curve.norm_p = meta.value("norm_p", 2.0);
    curve.n_pairs = meta.value("n_pairs", std::int64_t{0});
    curve.dim = meta.value("dim", 0);
    curve.subject_id = meta.value("subject_id", "");
    curve.validate();
    return curve;
}

std::string report_to_json(const BoundReport& r, ExplainerId id) {
    nlohmann::json j{{"explainer", to_string(id)},
                     {"violations", r.violations},
                     {"max_ratio", r.max_ratio},
                     {"bound", r.bound},
                     {"lipschitz_upper", r.lipschitz_upper},
                     {"constant", r.constant},
                     {"n_pairs", r.n_pairs}};
    return j.dump(2) + "\n";
}

}  // namespace astute
