#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "astute/data.hpp"
#include "astute/explain.hpp"
#include "astute/metrics.hpp"
#include "astute/model.hpp"
#include "astute/rng.hpp"
#include "helpers.hpp"

using namespace astute;
using testutil::random_mlp;

namespace {

const NormOrder p2{2.0};

Predictor raw_linear(std::vector<double> w) {
    return Predictor([w = std::move(w)](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
        return s;
    });
}

Predictor counting(Predictor inner, std::shared_ptr<std::size_t> counter) {
    return Predictor([inner = std::move(inner), counter](std::span<const double> x) {
        ++*counter;
        return inner(x);
    });
}

double binom(int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

TEST_CASE("shapley weights") {
    CHECK(shapley_weight(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(shapley_weight(1, 3) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK_THROWS_AS(shapley_weight(-1, 3), std::invalid_argument);
    CHECK_THROWS_AS(shapley_weight(3, 3), std::invalid_argument);

    // the weights over all subsets not containing a feature sum to one
    for (int d : {1, 2, 4, 9, 20, 25}) {
        double total = 0.0;
        for (int k = 0; k <= d - 1; ++k) total += binom(d - 1, k) * shapley_weight(k, d);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("exact shap on a raw linear head is the additive split") {
    const auto counter = std::make_shared<std::size_t>(0);
    const Predictor f = counting(raw_linear({1.0, 2.0}), counter);
    const Attribution a = shap_exact(f, Sample{3.0, 4.0});
    REQUIRE(a.scores.size() == 2);
    CHECK(a.scores[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(a.scores[1] == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(*counter == 4);  // one evaluation per mask
    CHECK(a.exact);
}

TEST_CASE("exact shap efficiency on a sigmoid linear model") {
    LinearModel lin;
    lin.w = {1.0, 2.0};
    const Model m{lin};
    const Predictor f(m);
    const Attribution a = shap_exact(f, Sample{3.0, 4.0});
    const double expect = sigmoid(11.0) - 0.5;
    CHECK(a.scores[0] + a.scores[1] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("exact shap of a constant predictor is zero") {
    const Predictor f([](std::span<const double>) { return 0.42; });
    const Attribution a = shap_exact(f, Sample{1.0, -2.0, 3.0});
    for (double v : a.scores) CHECK(v == 0.0);
}

TEST_CASE("exact shap refuses dimensions past the cutoff") {
    const Predictor f([](std::span<const double>) { return 0.0; });
    const Sample x(21, 1.0);
    try {
        shap_exact(f, x, 20);
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("shap_sampled") != std::string::npos);
    }
}

TEST_CASE("shap efficiency holds on random mlps") {
    SeqRng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(9));
        const Model m{random_mlp({d, 12, 1}, 100 + trial)};
        const Predictor f(m);
        Sample x(d);
        for (auto& v : x) v = rng.gaussian();
        const Attribution a = shap_exact(f, x);
        double total = 0.0;
        for (double v : a.scores) total += v;
        const Sample zero(d, 0.0);
        CHECK(std::fabs(total - (predict(m, x) - predict(m, zero))) <= 1e-9);
    }
}

TEST_CASE("shap symmetry for exchangeable equal features") {
    // f depends on features 0 and 1 only through their sum
    const Predictor f([](std::span<const double> x) {
        return std::tanh(x[0] + x[1]) + 0.3 * x[2];
    });
    const Attribution a = shap_exact(f, Sample{0.7, 0.7, -1.1});
    CHECK(std::fabs(a.scores[0] - a.scores[1]) <= 1e-9);
}

TEST_CASE("null feature gets zero shap and remove_individual attribution") {
    const Predictor f([](std::span<const double> x) {
        return std::sin(x[0]) + x[2] * x[2];  // never reads feature 1
    });
    const Sample x{0.4, 5.0, -0.8};
    CHECK(std::fabs(shap_exact(f, x).scores[1]) <= 1e-12);
    CHECK(std::fabs(remove_individual(f, x).scores[1]) <= 1e-12);

    // exact rise assigns the unconditional mean to a null feature
    RiseConfig rc;
    rc.exact = true;
    const Attribution r = rise(f, x, rc);
    double mean = 0.0;  // E[f(x .* z)] over i.i.d. Bernoulli(1/2) masks
    for (int m = 0; m < 8; ++m) {
        Sample xm(3, 0.0);
        for (int j = 0; j < 3; ++j)
            if (m >> j & 1) xm[j] = x[j];
        mean += 0.125 * f(xm);
    }
    CHECK(std::fabs(r.scores[1] - mean) <= 1e-12);
}

TEST_CASE("remove_individual examples") {
    const auto counter = std::make_shared<std::size_t>(0);
    const Predictor raw = counting(raw_linear({1.0, 2.0}), counter);
    const Attribution a = remove_individual(raw, Sample{3.0, 4.0});
    CHECK(a.scores[0] == 3.0);
    CHECK(a.scores[1] == 8.0);
    CHECK(*counter == 3);  // d + 1 evaluations

    const Predictor c([](std::span<const double>) { return 1.0; });
    for (double v : remove_individual(c, Sample{1, 2, 3}).scores) CHECK(v == 0.0);

    LinearModel lin;
    lin.w = {1.0, 0.0};
    const Model m{lin};
    const Predictor f(m);
    CHECK(remove_individual(f, Sample{2.0, 9.0}).scores[1] == 0.0);
}

TEST_CASE("exact rise on a raw linear head") {
    const Predictor f = raw_linear({1.0, 2.0});
    RiseConfig rc;
    rc.exact = true;
    rc.inclusion_prob = 0.5;
    const Attribution a = rise(f, Sample{3.0, 4.0}, rc);
    CHECK(a.scores[0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(a.scores[1] == doctest::Approx(9.5).epsilon(1e-14));

    const Predictor c([](std::span<const double>) { return 0.37; });
    for (double v : rise(c, Sample{1, 2, 3}, rc).scores)
        CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("exact rise conditional weights renormalize for any inclusion prob") {
    const Predictor one([](std::span<const double>) { return 1.0; });
    RiseConfig rc;
    rc.exact = true;
    rc.inclusion_prob = 0.3;
    for (double v : rise(one, Sample{1, 2, 3, 4}, rc).scores)
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampled shap agrees with enumeration within four standard errors") {
    const Model m{random_mlp({6, 10, 1}, 55)};
    const Predictor f(m);
    SeqRng rng(8);
    Sample x(6);
    for (auto& v : x) v = rng.gaussian();

    const Attribution exact = shap_exact(f, x);
    const Attribution est = shap_sampled(f, x, 20000, 99);
    REQUIRE(est.stderrs.size() == 6);
    for (int i = 0; i < 6; ++i) {
        const double se = std::max(est.stderrs[i], 1e-12);
        CHECK(std::fabs(est.scores[i] - exact.scores[i]) <= 4.0 * se);
    }

    // determinism and single-permutation edge
    const Attribution est2 = shap_sampled(f, x, 20000, 99);
    CHECK(est.scores == est2.scores);
    const Predictor c([](std::span<const double>) { return 0.5; });
    for (double v : shap_sampled(c, Sample{1, 2, 3}, 1, 0).scores) CHECK(v == 0.0);
}

TEST_CASE("sampled rise agrees with enumeration within four standard errors") {
    const Model m{random_mlp({6, 10, 1}, 56)};
    const Predictor f(m);
    SeqRng rng(9);
    Sample x(6);
    for (auto& v : x) v = rng.gaussian();

    RiseConfig exact_cfg;
    exact_cfg.exact = true;
    const Attribution exact = rise(f, x, exact_cfg);

    RiseConfig sampled_cfg;
    sampled_cfg.exact = false;
    sampled_cfg.n_masks = 10000;
    sampled_cfg.seed = 5;
    const Attribution est = rise(f, x, sampled_cfg);
    for (int i = 0; i < 6; ++i) {
        const double se = std::max(est.stderrs[i], 1e-12);
        CHECK(std::fabs(est.scores[i] - exact.scores[i]) <= 4.0 * se);
    }
    CHECK(rise(f, x, sampled_cfg).scores == est.scores);
}

TEST_CASE("deterministic astuteness bound for a linear model over close pairs") {
    LinearModel lin;
    lin.w = {0.8, -1.4, 0.5, 2.0};
    lin.b = 0.2;
    const Model m{lin};
    const Predictor f(m);
    const double L = *known_lipschitz_upper(m, p2);
    const int d = 4;
    const double root_d = std::sqrt(static_cast<double>(d));

    SeqRng rng(77);
    std::vector<Sample> xs;
    std::vector<Attribution> shap_a, rem_a, rise_a;
    RiseConfig rc;
    rc.exact = true;
    for (int i = 0; i < 60; ++i) {
        Sample x(d);
        for (auto& v : x) v = rng.gaussian();
        xs.push_back(x);
        shap_a.push_back(shap_exact(f, x));
        rem_a.push_back(remove_individual(f, x));
        rise_a.push_back(rise(f, x, rc));
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            const double dx = distance(xs[i], xs[j], p2);
            CHECK(distance(shap_a[i].scores, shap_a[j].scores, p2) <=
                  2.0 * root_d * L * dx * (1.0 + 1e-9));
            CHECK(distance(rem_a[i].scores, rem_a[j].scores, p2) <=
                  2.0 * root_d * L * dx * (1.0 + 1e-9));
            CHECK(distance(rise_a[i].scores, rise_a[j].scores, p2) <=
                  root_d * L * dx * (1.0 + 1e-9));
        }
}

TEST_CASE("batch explanation is ordered, deterministic and matches serial") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 40;
    spec.dim = 6;
    spec.seed = 21;
    const Dataset data = generate(spec);
    const Model m{random_mlp({6, 12, 1}, 4)};
    const Predictor f(m);

    for (const ExplainerId id :
         {ExplainerId::shap, ExplainerId::rise, ExplainerId::remove_individual}) {
        ExplainerConfig cfg;
        cfg.id = id;
        cfg.exact = id != ExplainerId::rise;  // exercise both modes
        cfg.n_masks = 500;
        cfg.seed = 7;
        const auto par = explain_dataset(f, data, cfg);
        const auto ser = serial::explain_dataset(f, data, cfg);
        REQUIRE(par.size() == data.size());
        for (std::size_t s = 0; s < par.size(); ++s) {
            CHECK(par[s].sample_index == static_cast<int>(s));
            CHECK(par[s].scores == ser[s].scores);
        }
        const auto rerun = explain_dataset(f, data, cfg);
        for (std::size_t s = 0; s < par.size(); ++s)
            CHECK(par[s].scores == rerun[s].scores);
    }
}

TEST_CASE("attribution csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "astute_test_explain";
    std::filesystem::create_directories(dir);

    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 12;
    spec.dim = 5;
    spec.seed = 22;
    const Dataset data = generate(spec);
    const Model m{random_mlp({5, 8, 1}, 5)};
    ExplainerConfig cfg;
    cfg.id = ExplainerId::shap;
    const auto attrs = explain_dataset(Predictor(m), data, cfg);

    const auto path = (dir / "attr.csv").string();
    save_attributions(attrs, path, R"({"model":"unit-test"})");
    const auto back = load_attributions(path);
    REQUIRE(back.size() == attrs.size());
    for (std::size_t s = 0; s < attrs.size(); ++s) {
        CHECK(back[s].sample_index == attrs[s].sample_index);
        CHECK(back[s].explainer == attrs[s].explainer);
        CHECK(back[s].scores == attrs[s].scores);
    }
    CHECK(std::filesystem::exists(path + ".meta.json"));
}
