#include "astute/data.hpp"

#include <algorithm>
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
constexpr std::uint64_t kFeatureSalt = 0xFEA7;
constexpr std::uint64_t kBranchSalt = 0xB4A2;
constexpr std::uint64_t kLabelSalt = 0x1AB3;
constexpr std::uint64_t kSplitSalt = 0x5714;
}  // namespace

std::string to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::orange_skin: return "orange_skin";
        case GeneratorKind::nonlinear_additive: return "nonlinear_additive";
        case GeneratorKind::switch_mixture: return "switch";
    }
    return "?";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
    if (s == "orange_skin") return GeneratorKind::orange_skin;
    if (s == "nonlinear_additive") return GeneratorKind::nonlinear_additive;
    if (s == "switch") return GeneratorKind::switch_mixture;
    throw std::invalid_argument("unknown generator kind: " + s);
}

void GeneratorSpec::validate() const {
    if (n < 1) throw std::invalid_argument("GeneratorSpec: n must be >= 1");
    const int min_dim = kind == GeneratorKind::switch_mixture ? 10 : 4;
    if (dim < min_dim)
        throw std::invalid_argument(to_string(kind) + " requires dim >= " +
                                    std::to_string(min_dim));
}

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

double orange_skin_score(std::span<const double> x) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += x[i] * x[i];
    return s - 4.0;
}

double nonlinear_additive_score(std::span<const double> x) {
    return -100.0 * std::sin(2.0 * x[0]) + 2.0 * std::fabs(x[1]) + x[2] +
           std::exp(-x[3]);
}

double switch_score(std::span<const double> x, bool high_component) {
    if (high_component) {
        double s = 0.0;
        for (int i = 1; i <= 4; ++i) s += x[i] * x[i];
        return s - 4.0;
    }
    return -100.0 * std::sin(2.0 * x[5]) + 2.0 * std::fabs(x[6]) + x[7] +
           std::exp(-x[8]);
}

Dataset generate(const GeneratorSpec& spec) {
    spec.validate();
    const std::uint64_t n = spec.n;
    const int d = spec.dim;

    const SplitMix64 feat(mix_seed(spec.seed, kFeatureSalt));
    const SplitMix64 branch(mix_seed(spec.seed, kBranchSalt));
    const SplitMix64 label(mix_seed(spec.seed, kLabelSalt));

    Dataset out;
    out.dim = d;
    out.features.resize(n * static_cast<std::size_t>(d));
    out.labels.resize(n);

    // RNG streams are indexed by (sample, feature) so the loop can be split
    // across workers without changing the result
#pragma omp parallel for schedule(static) num_threads(max_jobs())
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s) {
        double* row = out.features.data() + s * d;
        const std::uint64_t base = static_cast<std::uint64_t>(s) * d;
        for (int j = 0; j < d; ++j) row[j] = feat.gaussian_at(base + j);

        double score = 0.0;
        switch (spec.kind) {
            case GeneratorKind::orange_skin:
                score = orange_skin_score({row, static_cast<std::size_t>(d)});
                break;
            case GeneratorKind::nonlinear_additive:
                score = nonlinear_additive_score({row, static_cast<std::size_t>(d)});
                break;
            case GeneratorKind::switch_mixture: {
                const bool high = branch.uniform_at(s) < 0.5;
                row[0] += high ? 3.0 : -3.0;
                score = switch_score({row, static_cast<std::size_t>(d)}, high);
                break;
            }
        }
        out.labels[s] = label.uniform_at(s) < sigmoid(score) ? 1 : 0;
    }
    return out;
}

FeatureStats compute_stats(const Dataset& data) {
    const std::size_t n = data.size();
    const int d = data.dim;
    FeatureStats st;
    st.mean.assign(d, 0.0);
    st.stddev.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = data.row(i);
        for (int j = 0; j < d; ++j) st.mean[j] += row[j];
    }
    for (int j = 0; j < d; ++j) st.mean[j] /= static_cast<double>(n);
    if (n > 1) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = data.row(i);
            for (int j = 0; j < d; ++j) {
                const double t = row[j] - st.mean[j];
                st.stddev[j] += t * t;
            }
        }
        for (int j = 0; j < d; ++j)
            st.stddev[j] = std::sqrt(st.stddev[j] / static_cast<double>(n - 1));
    }
    return st;
}

void apply_stats(Dataset& data, const FeatureStats& stats) {
    const int d = data.dim;
    if (static_cast<int>(stats.mean.size()) != d)
        throw std::invalid_argument("apply_stats: dimension mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) {
        double* row = data.features.data() + i * d;
        for (int j = 0; j < d; ++j) {
            row[j] -= stats.mean[j];
            if (stats.stddev[j] > 0.0) row[j] /= stats.stddev[j];
        }
    }
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool standardize) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("load_csv: empty file: " + path);

    const auto header = split_csv_line(line);
    int label_idx = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == label_column) label_idx = static_cast<int>(c);
    if (label_idx < 0) {
        bool ok = false;
        const double v = parse_double_strict(label_column, ok);
        if (ok && v >= 0 && v < static_cast<double>(header.size()) &&
            v == std::floor(v))
            label_idx = static_cast<int>(v);
    }
    if (label_idx < 0)
        throw std::invalid_argument("load_csv: label column '" + label_column +
                                    "' not found in header");

    Dataset out;
    out.dim = static_cast<int>(header.size()) - 1;
    if (out.dim < 1) throw std::invalid_argument("load_csv: no feature columns");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("load_csv: row " + std::to_string(lineno) +
                                        " has " + std::to_string(cells.size()) +
                                        " cells, expected " +
                                        std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            bool ok = false;
            const double v = parse_double_strict(cells[c], ok);
            if (!ok || !std::isfinite(v))
                throw std::invalid_argument("load_csv: non-numeric cell at row " +
                                            std::to_string(lineno) + ", column '" +
                                            header[c] + "'");
            if (static_cast<int>(c) == label_idx) {
                if (v != 0.0 && v != 1.0)
                    throw std::invalid_argument(
                        "load_csv: non-binary label " + cells[c] + " at row " +
                        std::to_string(lineno));
                out.labels.push_back(static_cast<int>(v));
            } else {
                out.features.push_back(v);
            }
        }
    }
    if (out.labels.empty()) throw std::invalid_argument("load_csv: no data rows");
    out.validate();
    if (standardize) apply_stats(out, compute_stats(out));
    return out;
}

void save_csv(const Dataset& data, const std::string& path, const GeneratorSpec* spec) {
    data.validate();
    std::string body;
    body.reserve(data.size() * data.dim * 12);
    for (int j = 0; j < data.dim; ++j) body += "f" + std::to_string(j + 1) + ",";
    body += "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.row(i);
        for (int j = 0; j < data.dim; ++j) {
            body += fmt_double(row[j]);
            body += ',';
        }
        body += std::to_string(data.labels[i]);
        body += '\n';
    }
    write_text_atomic(path, body);

    if (spec) {
        nlohmann::json meta{{"kind", to_string(spec->kind)},
                            {"n", spec->n},
                            {"dim", spec->dim},
                            {"seed", spec->seed}};
        std::string sidecar = path;
        if (sidecar.size() > 4 && sidecar.substr(sidecar.size() - 4) == ".csv")
            sidecar = sidecar.substr(0, sidecar.size() - 4);
        sidecar += ".spec.json";
        write_text_atomic(sidecar, meta.dump(2) + "\n");
    }
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
    data.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("train_test_split: test_fraction must be in (0,1)");
    const std::size_t n = data.size();
    const std::size_t n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * test_fraction));
    if (n_test == 0 || n_test == n)
        throw std::invalid_argument("train_test_split: split leaves an empty side");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SeqRng rng(mix_seed(seed, kSplitSalt));
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(idx[i], idx[rng.below(i + 1)]);

    Dataset test, train;
    test.dim = train.dim = data.dim;
    for (std::size_t t = 0; t < n; ++t) {
        Dataset& dst = t < n_test ? test : train;
        dst.push_row(data.row(idx[t]), data.labels[idx[t]]);
    }
    return {train, test};
}

}  // namespace astute
