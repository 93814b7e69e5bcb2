// astute: measure explainer astuteness and probabilistic Lipschitzness of
// black-box tabular predictors, and check the predicted astuteness lower
// bounds against empirical estimates.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "astute/data.hpp"
#include "astute/explain.hpp"
#include "astute/io.hpp"
#include "astute/metrics.hpp"
#include "astute/model.hpp"
#include "astute/parallel.hpp"
#include "astute/report.hpp"
#include "astute/robustness.hpp"
#include "astute/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace astute;

namespace {

std::vector<double> parse_grid(const std::string& s) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw std::invalid_argument("grid must be formatted as lo:hi:step, got '" + s + "'");
    return make_grid(lo, hi, step);
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

Dataset load_dataset(const std::string& path, const std::string& label_column,
                     bool standardize) {
    return load_csv(path, label_column, standardize);
}

double resolve_radius(const std::string& radius, const Dataset& data, NormOrder ord,
                      std::uint64_t max_pairs, std::uint64_t seed) {
    if (radius == "median") return median_pairwise_distance(data, ord, max_pairs, seed);
    bool ok = false;
    const double r = parse_double_strict(radius, ok);
    if (!ok || !(r >= 0.0))
        throw std::invalid_argument("radius must be 'median' or a nonnegative number");
    return r;
}

PairMode parse_pair_mode(const std::string& s) {
    if (s == "auto" || s == "sampled") return PairMode::sampled;
    if (s == "exhaustive") return PairMode::exhaustive;
    throw std::invalid_argument("pair mode must be auto, sampled or exhaustive");
}

int default_hidden_width(const std::string& data_path) {
    // synthetic data ships with a generator sidecar; real tabular data does not
    std::string sidecar = data_path;
    if (sidecar.size() > 4 && sidecar.substr(sidecar.size() - 4) == ".csv")
        sidecar = sidecar.substr(0, sidecar.size() - 4);
    sidecar += ".spec.json";
    return fs::exists(sidecar) ? 200 : 32;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::string kind;
    std::uint64_t n = 10000;
    int dim = 10;
    std::uint64_t seed = 0;
    std::string out;
};

void run_gen(const GenArgs& a) {
    GeneratorSpec spec;
    spec.kind = generator_kind_from_string(a.kind);
    spec.n = a.n;
    spec.dim = a.dim;
    spec.seed = a.seed;
    const Dataset data = generate(spec);
    save_csv(data, a.out, &spec);

    std::size_t positives = 0;
    for (int y : data.labels) positives += y;
    std::printf("wrote %s: n=%zu dim=%d positives=%zu (balance %.3f)\n", a.out.c_str(),
                data.size(), data.dim, positives,
                static_cast<double>(positives) / static_cast<double>(data.size()));
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string label_column = "label";
    bool standardize = false;
    std::string arch;
    TrainConfig cfg;
    double cap = 0.0;
    bool cap_set = false;
    std::string test_data;
    std::string out;
};

void run_train(const TrainArgs& a) {
    const Dataset data = load_dataset(a.data, a.label_column, a.standardize);
    TrainConfig cfg = a.cfg;
    if (a.cap_set) cfg.lipschitz_cap = a.cap;
    if (cfg.hidden_width == 0) cfg.hidden_width = default_hidden_width(a.data);

    std::optional<Dataset> test;
    if (!a.test_data.empty())
        test = load_dataset(a.test_data, a.label_column, a.standardize);

    const TrainedModel tm =
        train(data, arch_from_string(a.arch), cfg, test ? &*test : nullptr);
    save_model(tm, a.out);
    std::printf("wrote %s: arch=%s train_accuracy=%.4f", a.out.c_str(),
                tm.meta.arch.c_str(), tm.meta.train_accuracy);
    if (test) std::printf(" test_accuracy=%.4f", tm.meta.test_accuracy);
    std::printf("\n");
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
    std::string model;
    std::string data;
    std::string label_column = "label";
    std::string explainer;
    std::string mode = "auto";
    int exact_cutoff = 20;
    int n_permutations = 50000;
    int n_masks = 10000;
    double inclusion_prob = 0.5;
    std::uint64_t seed = 0;
    std::string out;
};

void run_explain(const ExplainArgs& a) {
    const TrainedModel tm = load_model(a.model);
    const Dataset data = load_dataset(a.data, a.label_column, false);

    ExplainerConfig cfg;
    cfg.id = explainer_from_string(a.explainer);
    cfg.exact_cutoff = a.exact_cutoff;
    cfg.n_permutations = a.n_permutations;
    cfg.n_masks = a.n_masks;
    cfg.inclusion_prob = a.inclusion_prob;
    cfg.seed = a.seed;
    if (a.mode == "auto")
        cfg.exact = data.dim <= a.exact_cutoff;
    else if (a.mode == "exact")
        cfg.exact = true;
    else if (a.mode == "sampled")
        cfg.exact = false;
    else
        throw std::invalid_argument("mode must be auto, exact or sampled");

    const Predictor f(tm.model);
    const auto attrs = explain_dataset(f, data, cfg);
    const json extra{{"model", a.model}, {"data", a.data}};
    save_attributions(attrs, a.out, extra.dump());
    std::printf("wrote %s: explainer=%s samples=%zu exact=%d\n", a.out.c_str(),
                a.explainer.c_str(), attrs.size(), attrs.front().exact ? 1 : 0);
}

// ---------------------------------------------------------------------------
// lipschitz / astuteness

struct CurveArgs {
    std::string model;  // lipschitz only
    std::string attr;   // astuteness only
    std::string data;
    std::string label_column = "label";
    std::string radius = "median";
    std::uint64_t max_pairs = 200000;
    std::uint64_t pair_seed = 0;
    std::string pair_mode = "auto";
    double p = 2.0;
    std::string grid;
    std::string subject;
    std::string out;
};

void run_lipschitz(const CurveArgs& a) {
    const TrainedModel tm = load_model(a.model);
    const Dataset data = load_dataset(a.data, a.label_column, false);
    const NormOrder ord{a.p};

    PairSamplePlan plan;
    plan.max_pairs = a.max_pairs;
    plan.seed = a.pair_seed;
    plan.mode = parse_pair_mode(a.pair_mode);
    plan.radius = resolve_radius(a.radius, data, ord, a.max_pairs, a.pair_seed);

    const std::string subject =
        a.subject.empty() ? stem(a.data) + "/" + stem(a.model) : a.subject;
    const Predictor f(tm.model);
    const auto curve = estimate_plipschitz(f, data, plan, ord,
                                           parse_grid(a.grid.empty() ? "0.1:1.0:0.1" : a.grid),
                                           subject);
    const json extra{{"model", a.model},
                     {"data", a.data},
                     {"pair_seed", a.pair_seed},
                     {"radius_source", a.radius}};
    save_curve(curve, a.out, extra.dump());
    std::printf("wrote %s: r=%.6g n_pairs=%lld\n", a.out.c_str(), curve.radius,
                static_cast<long long>(curve.n_pairs));
}

void run_astuteness(const CurveArgs& a) {
    const auto attrs = load_attributions(a.attr);
    const Dataset data = load_dataset(a.data, a.label_column, false);
    const NormOrder ord{a.p};

    PairSamplePlan plan;
    plan.max_pairs = a.max_pairs;
    plan.seed = a.pair_seed;
    plan.mode = parse_pair_mode(a.pair_mode);
    plan.radius = resolve_radius(a.radius, data, ord, a.max_pairs, a.pair_seed);

    const std::string subject =
        a.subject.empty() ? stem(a.data) + "/" + stem(a.attr) : a.subject;
    const auto curve = estimate_astuteness(attrs, data, plan, ord,
                                           parse_grid(a.grid.empty() ? "0.1:1.1:0.1" : a.grid),
                                           subject);
    const json extra{{"attr", a.attr},
                     {"data", a.data},
                     {"pair_seed", a.pair_seed},
                     {"radius_source", a.radius}};
    save_curve(curve, a.out, extra.dump());
    std::printf("wrote %s: r=%.6g n_pairs=%lld\n", a.out.c_str(), curve.radius,
                static_cast<long long>(curve.n_pairs));
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs {
    std::string profile;
    std::string explainer;
    std::string grid = "0.1:1.1:0.1";
    int dim = 0;
    std::string subject;
    std::string out;
};

void run_bound(const BoundArgs& a) {
    const RobustnessCurve profile = load_curve(a.profile);
    const ExplainerId id = explainer_from_string(a.explainer);

    BoundSpec spec;
    spec.C = explainer_constant(id);
    spec.dim = a.dim > 0 ? a.dim : profile.dim;
    spec.norm_order = NormOrder{profile.norm_p};
    if (spec.dim < 1)
        throw std::invalid_argument("profile metadata lacks dim; pass --dim");

    const std::string subject =
        a.subject.empty() ? profile.subject_id + "/" + a.explainer : a.subject;
    const auto curve = predict_bound(profile, spec, parse_grid(a.grid), subject);
    const json extra{{"profile", a.profile}, {"explainer", a.explainer}, {"C", spec.C}};
    save_curve(curve, a.out, extra.dump());
    std::printf("wrote %s: C=%g dim=%d\n", a.out.c_str(), spec.C, spec.dim);
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::vector<std::string> curves;
    double lambda_min = 0.1;
    double lambda_max = 1.1;
    std::string out;
};

void run_report(const ReportArgs& a) {
    if (a.curves.empty()) throw std::invalid_argument("report: no curve files given");
    std::vector<RobustnessCurve> curves;
    for (const auto& path : a.curves) curves.push_back(load_curve(path));
    const Report rep = build_report(curves, a.lambda_min, a.lambda_max);
    write_report_files(rep, curves, a.out);

    std::printf("%-40s %10s %10s %10s\n", "subject", "auc_emp", "auc_pred", "gap");
    for (const auto& row : rep.rows)
        std::printf("%-40s %10.4f %10.4f %10.4f\n", row.subject_id.c_str(), row.auc_emp,
                    row.auc_pred, row.auc_gap);
    std::printf("wrote %s/report.json\n", a.out.c_str());
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string model;
    std::string data;
    std::string label_column = "label";
    std::string explainer;
    std::string radius = "median";
    std::uint64_t max_pairs = 200000;
    std::uint64_t pair_seed = 0;
    std::string pair_mode = "auto";
    double p = 2.0;
    double inclusion_prob = 0.5;
    std::string out;
};

void run_verify(const VerifyArgs& a) {
    const TrainedModel tm = load_model(a.model);
    const Dataset data = load_dataset(a.data, a.label_column, false);
    const NormOrder ord{a.p};
    const ExplainerId id = explainer_from_string(a.explainer);

    PairSamplePlan plan;
    plan.max_pairs = a.max_pairs;
    plan.seed = a.pair_seed;
    plan.mode = parse_pair_mode(a.pair_mode);
    plan.radius = resolve_radius(a.radius, data, ord, a.max_pairs, a.pair_seed);

    const BoundReport rep = verify_bound(id, tm.model, data, plan, ord, a.inclusion_prob);
    if (!a.out.empty()) write_text_atomic(a.out, report_to_json(rep, id));
    std::printf("explainer=%s violations=%lld max_ratio=%.6g bound=%.6g n_pairs=%lld\n",
                a.explainer.c_str(), static_cast<long long>(rep.violations), rep.max_ratio,
                rep.bound, static_cast<long long>(rep.n_pairs));
    if (rep.violations > 0)
        throw std::runtime_error("verify: bound violated on " +
                                 std::to_string(rep.violations) + " pairs");
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineArgs {
    std::string config;
    std::string out;  // overrides config out_dir
    std::uint64_t seed = 0;
    bool seed_set = false;
};

struct ModelPlan {
    Arch arch;
    TrainConfig cfg;
    std::string label;  // arch plus cap marker, e.g. mlp4-cap0.5
};

struct ExplainerPlan {
    ExplainerConfig cfg;
    std::string label;
};

std::string cap_label(const std::optional<double>& cap) {
    if (!cap) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-cap%g", *cap);
    return buf;
}

void run_pipeline(const PipelineArgs& a) {
    const json cfg = json::parse(read_text(a.config));

    const std::string out_dir = !a.out.empty() ? a.out : cfg.value("out_dir", "out");
    fs::create_directories(out_dir + "/data");
    fs::create_directories(out_dir + "/models");
    fs::create_directories(out_dir + "/attrs");
    fs::create_directories(out_dir + "/curves");

    const double norm_p = cfg.value("norm_p", 2.0);
    const NormOrder ord{norm_p};

    auto grid_of = [&cfg](const char* key, const std::string& fallback) {
        if (!cfg.contains(key)) return parse_grid(fallback);
        const auto& g = cfg.at(key);
        if (g.is_string()) return parse_grid(g.get<std::string>());
        return make_grid(g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>());
    };
    const auto l_grid = grid_of("l_grid", "0.1:1.0:0.1");
    const auto lambda_grid = grid_of("lambda_grid", "0.1:1.1:0.1");

    // datasets
    const auto& dcfg = cfg.at("dataset");
    Dataset train_set, test_set;
    std::string ds_label;
    if (dcfg.contains("kind")) {
        GeneratorSpec spec;
        spec.kind = generator_kind_from_string(dcfg.at("kind").get<std::string>());
        spec.dim = dcfg.value("dim", 10);
        spec.seed = dcfg.value("seed", std::uint64_t{0});
        ds_label = to_string(spec.kind);

        GeneratorSpec train_spec = spec;
        train_spec.n = dcfg.value("n_train", std::uint64_t{10000});
        GeneratorSpec test_spec = spec;
        test_spec.n = dcfg.value("n_test", std::uint64_t{1000});
        test_spec.seed = mix_seed(spec.seed, 0x7E57);
        train_set = generate(train_spec);
        test_set = generate(test_spec);
        save_csv(train_set, out_dir + "/data/" + ds_label + "_train.csv", &train_spec);
        save_csv(test_set, out_dir + "/data/" + ds_label + "_test.csv", &test_spec);
    } else {
        const std::string path = dcfg.at("csv").get<std::string>();
        ds_label = stem(path);
        Dataset all = load_dataset(path, dcfg.value("label_column", std::string("label")),
                                   false);
        auto split = train_test_split(all, dcfg.value("test_fraction", 0.2),
                                      dcfg.value("split_seed", std::uint64_t{0}));
        train_set = std::move(split.first);
        test_set = std::move(split.second);
        if (dcfg.value("standardize", true)) {
            const FeatureStats st = compute_stats(train_set);
            apply_stats(train_set, st);
            apply_stats(test_set, st);
        }
        save_csv(train_set, out_dir + "/data/" + ds_label + "_train.csv");
        save_csv(test_set, out_dir + "/data/" + ds_label + "_test.csv");
    }

    // model and explainer plans
    std::vector<ModelPlan> models;
    for (const auto& mj : cfg.at("models")) {
        ModelPlan mp;
        mp.arch = arch_from_string(mj.at("arch").get<std::string>());
        mp.cfg.epochs = mj.value("epochs", 2);
        mp.cfg.batch_size = mj.value("batch_size", 1000);
        mp.cfg.learning_rate = mj.value("learning_rate", 0.1);
        mp.cfg.momentum = mj.value("momentum", 0.9);
        mp.cfg.seed = mj.value("seed", std::uint64_t{0});
        mp.cfg.hidden_width = mj.value("hidden_width", 0);
        if (mp.cfg.hidden_width == 0) mp.cfg.hidden_width = dcfg.contains("kind") ? 200 : 32;
        if (mj.contains("lipschitz_cap") && !mj.at("lipschitz_cap").is_null())
            mp.cfg.lipschitz_cap = mj.at("lipschitz_cap").get<double>();
        mp.label = mj.value("label", to_string(mp.arch) + cap_label(mp.cfg.lipschitz_cap));
        models.push_back(std::move(mp));
    }

    std::vector<ExplainerPlan> explainers;
    for (const auto& ej : cfg.at("explainers")) {
        ExplainerPlan ep;
        ep.cfg.id = explainer_from_string(ej.at("id").get<std::string>());
        ep.cfg.exact_cutoff = ej.value("exact_cutoff", 20);
        ep.cfg.exact = ej.value("exact", test_set.dim <= ep.cfg.exact_cutoff);
        ep.cfg.n_permutations = ej.value("n_permutations", 50000);
        ep.cfg.n_masks = ej.value("n_masks", 10000);
        ep.cfg.inclusion_prob = ej.value("inclusion_prob", 0.5);
        ep.cfg.seed = ej.value("seed", std::uint64_t{0});
        ep.label = ej.value("label", to_string(ep.cfg.id));
        explainers.push_back(std::move(ep));
    }

    // pair plan over the test split
    const auto& pj = cfg.value("pairs", json::object());
    PairSamplePlan plan;
    plan.max_pairs = pj.value("max_pairs", std::uint64_t{200000});
    plan.seed = pj.value("seed", std::uint64_t{0});
    plan.mode = parse_pair_mode(pj.value("mode", std::string("auto")));
    const std::string radius_str =
        pj.contains("radius") && pj.at("radius").is_number()
            ? fmt_double(pj.at("radius").get<double>())
            : std::string("median");
    plan.radius = resolve_radius(radius_str, test_set, ord, plan.max_pairs, plan.seed);
    std::printf("pairs: radius=%.6g max_pairs=%llu\n", plan.radius,
                static_cast<unsigned long long>(plan.max_pairs));

    std::vector<std::uint64_t> seeds;
    if (a.seed_set)
        seeds = {a.seed};
    else if (cfg.contains("seeds"))
        for (const auto& s : cfg.at("seeds")) seeds.push_back(s.get<std::uint64_t>());
    else
        seeds = {0};

    // accumulate per-subject curves over seeds, then report on the means
    std::map<std::string, std::vector<RobustnessCurve>> emp_by_subject, bnd_by_subject;
    json per_seed = json::array();

    for (const std::uint64_t run_seed : seeds) {
        const std::string tag = "__seed" + std::to_string(run_seed);
        json seed_row{{"seed", run_seed}};

        for (const auto& mp : models) {
            TrainConfig tcfg = mp.cfg;
            tcfg.seed = mix_seed(mp.cfg.seed, run_seed);
            const TrainedModel tm = train(train_set, mp.arch, tcfg, &test_set);
            const std::string model_base = ds_label + "_" + mp.label;
            save_model(tm, out_dir + "/models/" + model_base + tag + ".json");
            std::printf("[seed %llu] %s: train_acc=%.4f test_acc=%.4f\n",
                        static_cast<unsigned long long>(run_seed), mp.label.c_str(),
                        tm.meta.train_accuracy, tm.meta.test_accuracy);

            const Predictor f(tm.model);
            const std::string model_subject = ds_label + "/" + mp.label;
            const json seed_meta{{"seeds", json::array({run_seed})},
                                 {"pair_seed", plan.seed}};
            const auto profile =
                estimate_plipschitz(f, test_set, plan, ord, l_grid, model_subject);
            save_curve(profile, out_dir + "/curves/" + model_base + tag +
                                    ".lipschitzness.csv",
                       seed_meta.dump());

            for (const auto& ep : explainers) {
                ExplainerConfig ecfg = ep.cfg;
                ecfg.seed = mix_seed(ep.cfg.seed, run_seed);
                const auto attrs = explain_dataset(f, test_set, ecfg);
                const std::string combo = model_base + "_" + ep.label;
                const std::string subject = model_subject + "/" + ep.label;
                save_attributions(attrs, out_dir + "/attrs/" + combo + tag + ".csv");

                const auto ast =
                    estimate_astuteness(attrs, test_set, plan, ord, lambda_grid, subject);
                save_curve(ast, out_dir + "/curves/" + combo + tag + ".astuteness.csv",
                           seed_meta.dump());

                BoundSpec bspec;
                bspec.C = explainer_constant(ep.cfg.id);
                bspec.dim = test_set.dim;
                bspec.norm_order = ord;
                const auto bnd = predict_bound(profile, bspec, lambda_grid, subject);
                save_curve(bnd, out_dir + "/curves/" + combo + tag + ".bound.csv",
                           seed_meta.dump());

                emp_by_subject[subject].push_back(ast);
                bnd_by_subject[subject].push_back(bnd);
                seed_row[subject] = auc_gap(ast, bnd, lambda_grid.front(), lambda_grid.back());
            }
        }
        per_seed.push_back(std::move(seed_row));
    }

    // seed-averaged curves feed the final report; min/max envelopes across
    // seeds become the error bars on the charts
    auto mean_curve = [](const std::vector<RobustnessCurve>& cs) {
        RobustnessCurve m = cs.front();
        for (std::size_t k = 1; k < cs.size(); ++k)
            for (std::size_t g = 0; g < m.values.size(); ++g)
                m.values[g] += cs[k].values[g];
        for (auto& v : m.values) v /= static_cast<double>(cs.size());
        return m;
    };
    std::vector<RobustnessCurve> mean_curves;
    std::map<std::string, CurveBand> bands;
    for (const auto& [subject, cs] : emp_by_subject) {
        mean_curves.push_back(mean_curve(cs));
        if (seeds.size() > 1) {
            CurveBand band{cs.front(), cs.front()};
            for (const auto& c : cs)
                for (std::size_t g = 0; g < c.values.size(); ++g) {
                    band.lo.values[g] = std::min(band.lo.values[g], c.values[g]);
                    band.hi.values[g] = std::max(band.hi.values[g], c.values[g]);
                }
            bands.emplace(subject, std::move(band));
        }
    }
    for (const auto& [subject, cs] : bnd_by_subject) mean_curves.push_back(mean_curve(cs));

    const Report rep = build_report(mean_curves, lambda_grid.front(), lambda_grid.back());
    write_report_files(rep, mean_curves, out_dir + "/report",
                       bands.empty() ? nullptr : &bands);
    write_text_atomic(out_dir + "/report/per_seed.json", per_seed.dump(2) + "\n");

    std::printf("%-40s %10s %10s %10s\n", "subject", "auc_emp", "auc_pred", "gap");
    for (const auto& row : rep.rows)
        std::printf("%-40s %10.4f %10.4f %10.4f\n", row.subject_id.c_str(), row.auc_emp,
                    row.auc_pred, row.auc_gap);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explainer astuteness and probabilistic Lipschitzness toolkit"};
    app.require_subcommand(1);

    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads for parallel kernels")
        ->envname("ASTUTE_JOBS");

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--kind", gen_args.kind, "orange_skin | nonlinear_additive | switch")
        ->required();
    gen->add_option("--n", gen_args.n, "number of samples");
    gen->add_option("--dim", gen_args.dim, "feature dimension");
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_option("--out", gen_args.out, "output CSV path")->required();

    TrainArgs train_args;
    auto* tr = app.add_subcommand("train", "train a predictor");
    tr->add_option("--data", train_args.data)->required();
    tr->add_option("--label-column", train_args.label_column);
    tr->add_flag("--standardize", train_args.standardize);
    tr->add_option("--arch", train_args.arch, "mlp2 | mlp4 | linear | kernel")->required();
    tr->add_option("--epochs", train_args.cfg.epochs);
    tr->add_option("--batch-size", train_args.cfg.batch_size);
    tr->add_option("--lr", train_args.cfg.learning_rate);
    tr->add_option("--momentum", train_args.cfg.momentum);
    auto* cap_opt = tr->add_option("--cap", train_args.cap, "per-layer operator norm cap");
    tr->add_option("--hidden-width", train_args.cfg.hidden_width,
                   "0 = auto (200 synthetic, 32 csv)");
    tr->add_option("--kernel-centers", train_args.cfg.kernel_max_centers);
    tr->add_option("--kernel-ridge", train_args.cfg.kernel_ridge);
    tr->add_option("--seed", train_args.cfg.seed);
    tr->add_option("--test-data", train_args.test_data);
    tr->add_option("--out", train_args.out)->required();

    ExplainArgs explain_args;
    auto* ex = app.add_subcommand("explain", "attribute predictions for every sample");
    ex->add_option("--model", explain_args.model)->required();
    ex->add_option("--data", explain_args.data)->required();
    ex->add_option("--label-column", explain_args.label_column);
    ex->add_option("--explainer", explain_args.explainer,
                   "shap | rise | remove_individual")
        ->required();
    ex->add_option("--mode", explain_args.mode, "auto | exact | sampled");
    ex->add_option("--exact-cutoff", explain_args.exact_cutoff);
    ex->add_option("--n-permutations", explain_args.n_permutations);
    ex->add_option("--n-masks", explain_args.n_masks);
    ex->add_option("--inclusion-prob", explain_args.inclusion_prob);
    ex->add_option("--seed", explain_args.seed);
    ex->add_option("--out", explain_args.out)->required();

    CurveArgs lip_args;
    auto* lip = app.add_subcommand("lipschitz", "estimate probabilistic Lipschitzness");
    lip->add_option("--model", lip_args.model)->required();
    lip->add_option("--data", lip_args.data)->required();
    lip->add_option("--label-column", lip_args.label_column);
    lip->add_option("--radius", lip_args.radius, "'median' or a number");
    lip->add_option("--max-pairs", lip_args.max_pairs);
    lip->add_option("--pair-seed", lip_args.pair_seed);
    lip->add_option("--pair-mode", lip_args.pair_mode, "auto | exhaustive | sampled");
    lip->add_option("--p", lip_args.p, "norm order");
    lip->add_option("--grid", lip_args.grid, "L grid lo:hi:step (default 0.1:1.0:0.1)");
    lip->add_option("--subject", lip_args.subject);
    lip->add_option("--out", lip_args.out)->required();

    CurveArgs ast_args;
    auto* ast = app.add_subcommand("astuteness", "estimate explainer astuteness");
    ast->add_option("--attr", ast_args.attr)->required();
    ast->add_option("--data", ast_args.data)->required();
    ast->add_option("--label-column", ast_args.label_column);
    ast->add_option("--radius", ast_args.radius);
    ast->add_option("--max-pairs", ast_args.max_pairs);
    ast->add_option("--pair-seed", ast_args.pair_seed);
    ast->add_option("--pair-mode", ast_args.pair_mode);
    ast->add_option("--p", ast_args.p);
    ast->add_option("--grid", ast_args.grid, "lambda grid lo:hi:step (default 0.1:1.1:0.1)");
    ast->add_option("--subject", ast_args.subject);
    ast->add_option("--out", ast_args.out)->required();

    BoundArgs bound_args;
    auto* bnd = app.add_subcommand("bound", "predicted astuteness lower bound");
    bnd->add_option("--profile", bound_args.profile, "lipschitzness curve CSV")->required();
    bnd->add_option("--explainer", bound_args.explainer)->required();
    bnd->add_option("--grid", bound_args.grid);
    bnd->add_option("--dim", bound_args.dim);
    bnd->add_option("--subject", bound_args.subject);
    bnd->add_option("--out", bound_args.out)->required();

    ReportArgs report_args;
    auto* rep = app.add_subcommand("report", "AUC-gap table and charts from curves");
    rep->add_option("--curves", report_args.curves, "curve CSV files");
    rep->add_option("--lambda-min", report_args.lambda_min);
    rep->add_option("--lambda-max", report_args.lambda_max);
    rep->add_option("--out", report_args.out, "output directory")->required();

    VerifyArgs verify_args;
    auto* ver = app.add_subcommand("verify", "check the deterministic astuteness bound");
    ver->add_option("--model", verify_args.model)->required();
    ver->add_option("--data", verify_args.data)->required();
    ver->add_option("--label-column", verify_args.label_column);
    ver->add_option("--explainer", verify_args.explainer)->required();
    ver->add_option("--radius", verify_args.radius);
    ver->add_option("--max-pairs", verify_args.max_pairs);
    ver->add_option("--pair-seed", verify_args.pair_seed);
    ver->add_option("--pair-mode", verify_args.pair_mode);
    ver->add_option("--p", verify_args.p);
    ver->add_option("--inclusion-prob", verify_args.inclusion_prob);
    ver->add_option("--out", verify_args.out, "report JSON path");

    PipelineArgs pipe_args;
    auto* pipe = app.add_subcommand(
        "pipeline", "gen -> train -> explain -> lipschitz -> astuteness -> bound -> report");
    pipe->add_option("--config", pipe_args.config, "experiment config JSON")->required();
    pipe->add_option("--out", pipe_args.out, "output directory (overrides config)");
    auto* seed_opt = pipe->add_option("--seed", pipe_args.seed, "run a single seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    }

    set_max_jobs(jobs);
    train_args.cap_set = cap_opt->count() > 0;
    pipe_args.seed_set = seed_opt->count() > 0;

    try {
        if (*gen) run_gen(gen_args);
        if (*tr) run_train(train_args);
        if (*ex) run_explain(explain_args);
        if (*lip) run_lipschitz(lip_args);
        if (*ast) run_astuteness(ast_args);
        if (*bnd) run_bound(bound_args);
        if (*rep) run_report(report_args);
        if (*ver) run_verify(verify_args);
        if (*pipe) run_pipeline(pipe_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", "runtime"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 3;
    }
    return 0;
}
