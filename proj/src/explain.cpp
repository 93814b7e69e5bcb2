#include "astute/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "astute/io.hpp"
#include "astute/parallel.hpp"
#include "astute/rng.hpp"

namespace astute {

namespace {
constexpr std::size_t kEvalBlock = 256;
}

std::string to_string(ExplainerId id) {
    switch (id) {
        case ExplainerId::shap: return "shap";
        case ExplainerId::rise: return "rise";
        case ExplainerId::remove_individual: return "remove_individual";
    }
    return "?";
}

ExplainerId explainer_from_string(const std::string& s) {
    if (s == "shap") return ExplainerId::shap;
    if (s == "rise") return ExplainerId::rise;
    if (s == "remove_individual") return ExplainerId::remove_individual;
    throw std::invalid_argument("unknown explainer: " + s);
}

Predictor::Predictor(SingleFn f) : single_(std::move(f)) {
    many_ = [fn = single_](const double* xs, std::size_t n, std::size_t d, double* out) {
        for (std::size_t r = 0; r < n; ++r) out[r] = fn({xs + r * d, d});
    };
}

Predictor::Predictor(const Model& m) {
    const Model* mp = &m;
    single_ = [mp](std::span<const double> x) { return predict(*mp, x); };
    many_ = [mp](const double* xs, std::size_t n, std::size_t d, double* out) {
        predict_batch(*mp, xs, n, d, out);
    };
}

void Predictor::many(const double* xs, std::size_t n, std::size_t d, double* out) const {
    many_(xs, n, d, out);
}

void RiseConfig::validate() const {
    if (!(inclusion_prob > 0.0 && inclusion_prob < 1.0))
        throw std::invalid_argument("RiseConfig: inclusion_prob must be in (0,1)");
    if (n_masks < 1) throw std::invalid_argument("RiseConfig: n_masks must be >= 1");
    if (exact_cutoff < 1) throw std::invalid_argument("RiseConfig: exact_cutoff must be >= 1");
}

double shapley_weight(int k, int d) {
    if (d < 1) throw std::invalid_argument("shapley_weight: d must be >= 1");
    if (k < 0 || k > d - 1)
        throw std::invalid_argument("shapley_weight: k must be in [0, d-1]");
    return std::exp(std::lgamma(k + 1.0) + std::lgamma(static_cast<double>(d - k)) -
                    std::lgamma(d + 1.0));
}

namespace {

// f on every masked variant of x, indexed by the mask bits
std::vector<double> eval_all_masks(const Predictor& f, std::span<const double> x) {
    const int d = static_cast<int>(x.size());
    const std::size_t total = std::size_t{1} << d;
    std::vector<double> vals(total);
    std::vector<double> block(kEvalBlock * x.size());
    for (std::size_t base = 0; base < total; base += kEvalBlock) {
        const std::size_t nb = std::min(kEvalBlock, total - base);
        for (std::size_t t = 0; t < nb; ++t) {
            const std::size_t m = base + t;
            double* row = block.data() + t * x.size();
            for (int j = 0; j < d; ++j) row[j] = (m >> j) & 1 ? x[j] : 0.0;
        }
        f.many(block.data(), nb, x.size(), vals.data() + base);
    }
    return vals;
}

}  // namespace

Attribution shap_exact(const Predictor& f, std::span<const double> x, int exact_cutoff) {
    const int d = static_cast<int>(x.size());
    if (d < 1) throw std::invalid_argument("shap_exact: empty sample");
    if (d > exact_cutoff)
        throw std::invalid_argument(
            "shap_exact: dimension " + std::to_string(d) + " exceeds the enumeration cutoff " +
            std::to_string(exact_cutoff) + "; use shap_sampled");

    const auto vals = eval_all_masks(f, x);
    std::vector<double> weight(d);
    for (int k = 0; k < d; ++k) weight[k] = shapley_weight(k, d);

    Attribution out;
    out.explainer = ExplainerId::shap;
    out.scores.assign(d, 0.0);
    out.n_masks = vals.size();
    out.exact = true;

    const std::size_t total = std::size_t{1} << d;
    for (int i = 0; i < d; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        double phi = 0.0;
        for (std::size_t m = 0; m < total; ++m) {
            if (m & bit) continue;
            phi += weight[std::popcount(m)] * (vals[m | bit] - vals[m]);
        }
        out.scores[i] = phi;
    }
    return out;
}

Attribution shap_sampled(const Predictor& f, std::span<const double> x,
                         int n_permutations, std::uint64_t seed) {
    const int d = static_cast<int>(x.size());
    if (d < 1) throw std::invalid_argument("shap_sampled: empty sample");
    if (n_permutations < 1)
        throw std::invalid_argument("shap_sampled: n_permutations must be >= 1");

    SeqRng rng(mix_seed(seed, 0x5A9));
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);

    std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
    std::vector<double> rows(static_cast<std::size_t>(d + 1) * d);
    std::vector<double> vals(d + 1);

    for (int t = 0; t < n_permutations; ++t) {
        for (int i = d - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);

        // row k holds x masked to the first k features of the permutation
        std::fill(rows.begin(), rows.begin() + d, 0.0);
        for (int k = 0; k < d; ++k) {
            double* prev = rows.data() + static_cast<std::size_t>(k) * d;
            double* next = prev + d;
            std::copy(prev, prev + d, next);
            next[perm[k]] = x[perm[k]];
        }
        f.many(rows.data(), d + 1, d, vals.data());
        for (int k = 0; k < d; ++k) {
            const double c = vals[k + 1] - vals[k];
            sum[perm[k]] += c;
            sumsq[perm[k]] += c * c;
        }
    }

    Attribution out;
    out.explainer = ExplainerId::shap;
    out.exact = false;
    out.seed = seed;
    out.n_masks = static_cast<std::uint64_t>(n_permutations);
    out.scores.assign(d, 0.0);
    out.stderrs.assign(d, 0.0);
    const double T = n_permutations;
    for (int i = 0; i < d; ++i) {
        out.scores[i] = sum[i] / T;
        if (n_permutations > 1) {
            const double var =
                std::max(0.0, (sumsq[i] - T * out.scores[i] * out.scores[i]) / (T - 1.0));
            out.stderrs[i] = std::sqrt(var / T);
        }
    }
    return out;
}

Attribution remove_individual(const Predictor& f, std::span<const double> x) {
    const int d = static_cast<int>(x.size());
    if (d < 1) throw std::invalid_argument("remove_individual: empty sample");

    std::vector<double> rows(static_cast<std::size_t>(d + 1) * d);
    std::copy(x.begin(), x.end(), rows.begin());
    for (int i = 0; i < d; ++i) {
        double* row = rows.data() + static_cast<std::size_t>(i + 1) * d;
        std::copy(x.begin(), x.end(), row);
        row[i] = 0.0;
    }
    std::vector<double> vals(d + 1);
    f.many(rows.data(), d + 1, d, vals.data());

    Attribution out;
    out.explainer = ExplainerId::remove_individual;
    out.exact = true;
    out.n_masks = static_cast<std::uint64_t>(d) + 1;
    out.scores.assign(d, 0.0);
    for (int i = 0; i < d; ++i) out.scores[i] = vals[0] - vals[i + 1];
    return out;
}

Attribution rise(const Predictor& f, std::span<const double> x, const RiseConfig& cfg) {
    cfg.validate();
    const int d = static_cast<int>(x.size());
    if (d < 1) throw std::invalid_argument("rise: empty sample");

    Attribution out;
    out.explainer = ExplainerId::rise;
    out.scores.assign(d, 0.0);
    out.seed = cfg.seed;

    if (cfg.exact) {
        if (d > cfg.exact_cutoff)
            throw std::invalid_argument("rise: exact mode requires d <= exact_cutoff");
        const auto vals = eval_all_masks(f, x);
        // mask weight by popcount; conditioning on z_i = 1 divides out one
        // factor of the inclusion probability
        std::vector<double> wt(d + 1);
        for (int k = 0; k <= d; ++k)
            wt[k] = std::exp(k * std::log(cfg.inclusion_prob) +
                             (d - k) * std::log1p(-cfg.inclusion_prob));
        const std::size_t total = std::size_t{1} << d;
        for (int i = 0; i < d; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            double acc = 0.0;
            for (std::size_t m = 0; m < total; ++m)
                if (m & bit) acc += wt[std::popcount(m)] * vals[m];
            out.scores[i] = acc / cfg.inclusion_prob;
        }
        out.exact = true;
        out.n_masks = total;
        return out;
    }

    out.exact = false;
    out.n_masks = static_cast<std::uint64_t>(cfg.n_masks);
    out.stderrs.assign(d, 0.0);
    std::vector<double> block(kEvalBlock * static_cast<std::size_t>(d));
    std::vector<double> vals(kEvalBlock);
    for (int i = 0; i < d; ++i) {
        const SplitMix64 stream(mix_seed(cfg.seed, 0xA15E + static_cast<std::uint64_t>(i)));
        double sum = 0.0, sumsq = 0.0;
        std::uint64_t draw = 0;
        for (int base = 0; base < cfg.n_masks; base += static_cast<int>(kEvalBlock)) {
            const int nb = std::min<int>(static_cast<int>(kEvalBlock), cfg.n_masks - base);
            for (int t = 0; t < nb; ++t) {
                double* row = block.data() + static_cast<std::size_t>(t) * d;
                for (int j = 0; j < d; ++j) {
                    const bool on = j == i || stream.uniform_at(draw++) < cfg.inclusion_prob;
                    row[j] = on ? x[j] : 0.0;
                }
            }
            f.many(block.data(), nb, d, vals.data());
            for (int t = 0; t < nb; ++t) {
                sum += vals[t];
                sumsq += vals[t] * vals[t];
            }
        }
        const double n = cfg.n_masks;
        out.scores[i] = sum / n;
        if (cfg.n_masks > 1) {
            const double var =
                std::max(0.0, (sumsq - n * out.scores[i] * out.scores[i]) / (n - 1.0));
            out.stderrs[i] = std::sqrt(var / n);
        }
    }
    return out;
}

namespace {

Attribution explain_one(const Predictor& f, std::span<const double> x,
                        const ExplainerConfig& cfg, std::uint64_t sample_seed) {
    switch (cfg.id) {
        case ExplainerId::shap:
            if (cfg.exact) return shap_exact(f, x, cfg.exact_cutoff);
            return shap_sampled(f, x, cfg.n_permutations, sample_seed);
        case ExplainerId::remove_individual:
            return remove_individual(f, x);
        case ExplainerId::rise: {
            RiseConfig rc;
            rc.inclusion_prob = cfg.inclusion_prob;
            rc.n_masks = cfg.n_masks;
            rc.exact = cfg.exact;
            rc.exact_cutoff = cfg.exact_cutoff;
            rc.seed = sample_seed;
            return rise(f, x, rc);
        }
    }
    throw std::logic_error("explain_one: unreachable");
}

void check_batch_config(const Dataset& data, const ExplainerConfig& cfg) {
    data.validate();
    if (cfg.exact && cfg.id != ExplainerId::remove_individual &&
        data.dim > cfg.exact_cutoff)
        throw std::invalid_argument(
            "explain_dataset: exact mode needs dim <= exact_cutoff; use sampled mode");
}

}  // namespace

std::vector<Attribution> explain_dataset(const Predictor& f, const Dataset& data,
                                         const ExplainerConfig& cfg) {
    check_batch_config(data, cfg);
    std::vector<Attribution> out(data.size());
#pragma omp parallel for schedule(dynamic) num_threads(max_jobs())
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(data.size()); ++s) {
        Attribution a = explain_one(f, data.row(s), cfg, mix_seed(cfg.seed, s));
        a.sample_index = static_cast<int>(s);
        out[s] = std::move(a);
    }
    return out;
}

namespace serial {
std::vector<Attribution> explain_dataset(const Predictor& f, const Dataset& data,
                                         const ExplainerConfig& cfg) {
    check_batch_config(data, cfg);
    std::vector<Attribution> out(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        Attribution a = explain_one(f, data.row(s), cfg, mix_seed(cfg.seed, s));
        a.sample_index = static_cast<int>(s);
        out[s] = std::move(a);
    }
    return out;
}
}  // namespace serial

void save_attributions(const std::vector<Attribution>& attrs, const std::string& path,
                       const std::string& extra_meta_json) {
    if (attrs.empty()) throw std::invalid_argument("save_attributions: empty batch");
    const std::size_t d = attrs.front().scores.size();

    std::string body = "sample_index,explainer";
    for (std::size_t j = 0; j < d; ++j) body += ",phi_" + std::to_string(j + 1);
    body += '\n';
    for (const auto& a : attrs) {
        if (a.scores.size() != d)
            throw std::invalid_argument("save_attributions: inconsistent dimensions");
        body += std::to_string(a.sample_index);
        body += ',';
        body += to_string(a.explainer);
        for (double v : a.scores) {
            body += ',';
            body += fmt_double(v);
        }
        body += '\n';
    }
    write_text_atomic(path, body);

    nlohmann::json meta{{"explainer", to_string(attrs.front().explainer)},
                        {"exact", attrs.front().exact},
                        {"seed", attrs.front().seed},
                        {"n_masks", attrs.front().n_masks},
                        {"dim", d},
                        {"n_samples", attrs.size()}};
    if (!extra_meta_json.empty()) {
        const auto extra = nlohmann::json::parse(extra_meta_json);
        for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    }
    write_text_atomic(path + ".meta.json", meta.dump(2) + "\n");
}

std::vector<Attribution> load_attributions(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("load_attributions: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "sample_index" || header[1] != "explainer")
        throw std::invalid_argument("load_attributions: unexpected header in " + path);
    const std::size_t d = header.size() - 2;

    std::vector<Attribution> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("load_attributions: bad row " +
                                        std::to_string(lineno) + " in " + path);
        Attribution a;
        bool ok = false;
        const double idx = parse_double_strict(cells[0], ok);
        if (!ok) throw std::invalid_argument("load_attributions: bad sample_index at row " +
                                             std::to_string(lineno));
        a.sample_index = static_cast<int>(idx);
        a.explainer = explainer_from_string(cells[1]);
        a.scores.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            a.scores[j] = parse_double_strict(cells[2 + j], ok);
            if (!ok)
                throw std::invalid_argument("load_attributions: non-numeric phi at row " +
                                            std::to_string(lineno));
        }
        out.push_back(std::move(a));
    }
    if (out.empty()) throw std::invalid_argument("load_attributions: no rows in " + path);
    return out;
}

}  // namespace astute
