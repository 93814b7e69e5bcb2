#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "astute/data.hpp"
#include "astute/metrics.hpp"
#include "astute/model.hpp"
#include "astute/rng.hpp"
#include "helpers.hpp"

using namespace astute;
using testutil::blobs;
using testutil::random_mlp;

namespace {
const NormOrder p2{2.0};

// orthogonal matrix from Gram-Schmidt over a seeded gaussian draw
Matrix random_orthogonal(int n, std::uint64_t seed) {
    SeqRng rng(seed);
    Matrix Q(n, n);
    for (int r = 0; r < n; ++r) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.gaussian();
        for (int prev = 0; prev < r; ++prev) {
            double dot = 0.0;
            for (int c = 0; c < n; ++c) dot += v[c] * Q.at(prev, c);
            for (int c = 0; c < n; ++c) v[c] -= dot * Q.at(prev, c);
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (int c = 0; c < n; ++c) Q.at(r, c) = v[c] / norm;
    }
    return Q;
}

// W = U diag(s) V^T with known singular values
Matrix with_singular_values(const std::vector<double>& s, std::uint64_t seed) {
    const int n = static_cast<int>(s.size());
    const Matrix U = random_orthogonal(n, seed);
    const Matrix V = random_orthogonal(n, seed + 1);
    Matrix W(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += U.at(i, k) * s[k] * V.at(j, k);
            W.at(i, j) = acc;
        }
    return W;
}

}  // namespace

TEST_CASE("predict examples") {
    LinearModel lin;
    lin.w = {1.0, 2.0};
    lin.b = 0.0;
    const Model m{lin};
    CHECK(predict(m, Sample{0, 0}) == 0.5);
    CHECK(predict(m, Sample{3, 4}) == doctest::Approx(sigmoid(11.0)).epsilon(1e-15));
    CHECK(predict(m, Sample{3, 4}) > 0.9999);
    CHECK_THROWS_AS(predict(m, Sample{1, 2, 3}), std::invalid_argument);

    KernelModel km;
    km.centers = Matrix(1, 2);
    km.centers.at(0, 0) = 3.0;
    km.centers.at(0, 1) = 4.0;
    km.coeff = {1.0};
    km.gamma = 0.7;
    km.bias = 0.0;
    CHECK(predict(Model{km}, Sample{3, 4}) ==
          doctest::Approx(sigmoid(1.0)).epsilon(1e-15));

    // probabilities stay inside (0, 1) even when the logit saturates
    LinearModel sat;
    sat.w = {1000.0};
    sat.b = 0.0;
    CHECK(predict(Model{sat}, Sample{5}) < 1.0);
    CHECK(predict(Model{sat}, Sample{-5}) > 0.0);
}

TEST_CASE("batch prediction matches single prediction bitwise") {
    const MlpModel mlp = random_mlp({7, 33, 15, 1}, 3);
    const Model m{mlp};
    SeqRng rng(5);
    const std::size_t n = 101;
    std::vector<double> xs(n * 7);
    for (auto& v : xs) v = rng.gaussian();
    std::vector<double> batch(n);
    predict_batch(m, xs.data(), n, 7, batch.data());
    for (std::size_t r = 0; r < n; ++r)
        CHECK(batch[r] == predict(m, {xs.data() + r * 7, 7}));
}

TEST_CASE("parallel dataset prediction equals serial") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 700;
    spec.seed = 2;
    const Dataset data = generate(spec);
    const Model m{random_mlp({10, 24, 1}, 8)};
    CHECK(predict_dataset(m, data) == serial::predict_dataset(m, data));
}

TEST_CASE("spectral norm via power iteration matches constructed singular values") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::vector<double> s{3.7, 1.2, 0.8, 0.05};
        const Matrix W = with_singular_values(s, 100 + seed);
        CHECK(spectral_norm(W) == doctest::Approx(3.7).epsilon(1e-6));
    }
    Matrix zero(3, 4);
    CHECK(spectral_norm(zero) == 0.0);

    // start vector orthogonal to the top singular direction still converges
    Matrix anti(1, 2);
    anti.at(0, 0) = 1.0;
    anti.at(0, 1) = -1.0;
    CHECK(spectral_norm(anti) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("lipschitz projection examples") {
    Matrix W(2, 2);
    W.at(0, 0) = 2.0;
    W.at(1, 1) = 1.0;
    const Matrix P = project_lipschitz(W, 1.0, p2);
    CHECK(P.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(P.at(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(P.at(0, 1) == 0.0);

    Matrix small(2, 2);
    small.at(0, 0) = 0.5;
    small.at(1, 1) = 0.1;
    const Matrix S = project_lipschitz(small, 1.0, p2);
    CHECK(S.a == small.a);  // already feasible: untouched

    Matrix zero(3, 3);
    CHECK(project_lipschitz(zero, 1.0, p2).a == zero.a);

    CHECK_THROWS_AS(project_lipschitz(W, 0.0, p2), std::invalid_argument);
    CHECK_THROWS_AS(project_lipschitz(W, 1.0, NormOrder{3.0}), std::invalid_argument);

    // p=1 uses the max column sum
    Matrix C(2, 2);
    C.at(0, 0) = 3.0;
    C.at(1, 0) = 1.0;
    const Matrix Pc = project_lipschitz(C, 2.0, NormOrder{1.0});
    CHECK(Pc.at(0, 0) == doctest::Approx(1.5));
    CHECK(Pc.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("known lipschitz upper bound") {
    LinearModel lin;
    lin.w = {3.0, 4.0};
    CHECK(*known_lipschitz_upper(Model{lin}, p2) == doctest::Approx(1.25).epsilon(1e-12));

    lin.w = {0.0, 0.0};
    CHECK(*known_lipschitz_upper(Model{lin}, p2) == 0.0);

    // p=1 pairs with the max-abs dual norm
    lin.w = {3.0, -4.0};
    CHECK(*known_lipschitz_upper(Model{lin}, NormOrder{1.0}) == doctest::Approx(1.0));

    MlpModel mlp = random_mlp({4, 8, 8, 1}, 21, 3.0);
    for (auto& W : mlp.weights) W = project_lipschitz(W, 1.0, p2);
    const double bound = *known_lipschitz_upper(Model{mlp}, p2);
    CHECK(bound <= 0.25 * (1.0 + 1e-9));

    KernelModel km;
    km.centers = Matrix(1, 2);
    km.coeff = {1.0};
    CHECK(!known_lipschitz_upper(Model{km}, p2).has_value());
}

TEST_CASE("lipschitz bound is sound on random pairs") {
    const Model mlp{random_mlp({5, 16, 16, 1}, 33, 1.5)};
    LinearModel lw;
    lw.w = {0.4, -1.2, 2.0, 0.0, 0.3};
    lw.b = 0.7;
    const Model lin{lw};

    for (const Model* m : {&mlp, &lin}) {
        const double L = *known_lipschitz_upper(*m, p2);
        SeqRng rng(44);
        for (int t = 0; t < 10000; ++t) {
            Sample x(5), y(5);
            for (int i = 0; i < 5; ++i) {
                x[i] = rng.gaussian() * 2.0;
                y[i] = rng.gaussian() * 2.0;
            }
            const double gap = std::fabs(predict(*m, x) - predict(*m, y));
            CHECK(gap <= L * distance(x, y, p2) * (1.0 + 1e-12) + 1e-300);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 24;
    spec.dim = 4;
    spec.seed = 10;
    const Dataset data = generate(spec);
    std::vector<std::size_t> batch(data.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        MlpModel m = random_mlp({4, 6, 5, 1}, seed);
        detail::MlpGrad grad;
        detail::mlp_loss_and_grad(m, data, batch, grad);

        detail::MlpGrad scratch;
        const double h = 1e-5;
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            for (std::size_t t = 0; t < m.weights[l].a.size(); t += 3) {
                const double keep = m.weights[l].a[t];
                m.weights[l].a[t] = keep + h;
                const double up = detail::mlp_loss_and_grad(m, data, batch, scratch);
                m.weights[l].a[t] = keep - h;
                const double dn = detail::mlp_loss_and_grad(m, data, batch, scratch);
                m.weights[l].a[t] = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double an = grad.dW[l].a[t];
                CHECK(std::fabs(fd - an) <= 1e-4 * std::max(1.0, std::fabs(an)));
            }
            for (std::size_t t = 0; t < m.biases[l].size(); t += 2) {
                const double keep = m.biases[l][t];
                m.biases[l][t] = keep + h;
                const double up = detail::mlp_loss_and_grad(m, data, batch, scratch);
                m.biases[l][t] = keep - h;
                const double dn = detail::mlp_loss_and_grad(m, data, batch, scratch);
                m.biases[l][t] = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double an = grad.db[l][t];
                CHECK(std::fabs(fd - an) <= 1e-4 * std::max(1.0, std::fabs(an)));
            }
        }
    }
}

TEST_CASE("training separable blobs reaches high accuracy on every arch") {
    const Dataset train_set = blobs(400, 1);
    const Dataset test_set = blobs(200, 2);

    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 40;
    cfg.learning_rate = 0.3;
    cfg.momentum = 0.9;
    cfg.seed = 7;
    cfg.hidden_width = 16;

    for (const Arch arch : {Arch::linear, Arch::mlp2, Arch::mlp4, Arch::kernel}) {
        const TrainedModel tm = train(train_set, arch, cfg, &test_set);
        INFO("arch " << to_string(arch) << " acc " << tm.meta.test_accuracy);
        CHECK(tm.meta.test_accuracy >= 0.95);
    }
}

TEST_CASE("zero epochs returns the initialized model") {
    // balanced labels carrying no signal: any fixed function scores ~0.5
    Dataset data;
    data.dim = 2;
    SeqRng rng(41);
    for (int i = 0; i < 2000; ++i)
        data.push_row(std::vector<double>{rng.gaussian(), rng.gaussian()},
                      static_cast<int>(i % 2));

    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 5;
    cfg.hidden_width = 8;

    const TrainedModel lin = train(data, Arch::linear, cfg, &data);
    CHECK(std::get<LinearModel>(lin.model).w == std::vector<double>{0.0, 0.0});
    CHECK(lin.meta.train_accuracy == 0.5);  // zero-initialized, constant 0.5 output

    const TrainedModel mlp = train(data, Arch::mlp2, cfg, &data);
    CHECK(mlp.meta.train_accuracy >= 0.4);
    CHECK(mlp.meta.train_accuracy <= 0.6);
}

TEST_CASE("training is deterministic") {
    const Dataset data = blobs(300, 9);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.hidden_width = 12;
    cfg.seed = 123;
    const TrainedModel a = train(data, Arch::mlp2, cfg);
    const TrainedModel b = train(data, Arch::mlp2, cfg);
    const auto& ma = std::get<MlpModel>(a.model);
    const auto& mb = std::get<MlpModel>(b.model);
    for (std::size_t l = 0; l < ma.weights.size(); ++l) {
        CHECK(ma.weights[l].a == mb.weights[l].a);
        CHECK(ma.biases[l] == mb.biases[l]);
    }
}

TEST_CASE("projection during training keeps every layer under the cap") {
    const Dataset data = blobs(400, 11);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 50;
    cfg.learning_rate = 0.5;
    cfg.hidden_width = 10;
    cfg.lipschitz_cap = 0.8;
    cfg.seed = 2;
    const TrainedModel tm = train(data, Arch::mlp4, cfg);
    for (const auto& W : std::get<MlpModel>(tm.model).weights)
        CHECK(spectral_norm(W) <= 0.8 * (1.0 + 1e-6));
}

TEST_CASE("diverging training reports an error") {
    // extreme feature scales overflow the activations within a few updates
    Dataset data;
    data.dim = 2;
    SeqRng rng(13);
    for (int i = 0; i < 64; ++i)
        data.push_row(std::vector<double>{1e160 * rng.gaussian(), 1e160 * rng.gaussian()},
                      static_cast<int>(i % 2));
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.learning_rate = 1.0;
    cfg.momentum = 0.9;
    cfg.hidden_width = 8;
    cfg.seed = 3;
    CHECK_THROWS_AS(train(data, Arch::mlp2, cfg), std::runtime_error);
}

TEST_CASE("model json round trip is bit exact") {
    const auto dir = std::filesystem::temp_directory_path() / "astute_test_model";
    std::filesystem::create_directories(dir);

    const Dataset data = blobs(200, 15);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 25;
    cfg.hidden_width = 9;
    cfg.seed = 31;

    for (const Arch arch : {Arch::linear, Arch::mlp2, Arch::kernel}) {
        const TrainedModel tm = train(data, arch, cfg, &data);
        const auto path = (dir / ("m_" + to_string(arch) + ".json")).string();
        save_model(tm, path);
        const TrainedModel back = load_model(path);
        CHECK(back.meta.arch == tm.meta.arch);
        CHECK(back.meta.train_accuracy == tm.meta.train_accuracy);
        CHECK(predict_dataset(back.model, data) == predict_dataset(tm.model, data));
        if (arch == Arch::mlp2) {
            const auto& ma = std::get<MlpModel>(tm.model);
            const auto& mb = std::get<MlpModel>(back.model);
            for (std::size_t l = 0; l < ma.weights.size(); ++l)
                CHECK(ma.weights[l].a == mb.weights[l].a);
        }
    }
}

TEST_CASE("orange_skin mlp2 learns past 0.70 test accuracy at desk scale") {
    GeneratorSpec tr;
    tr.kind = GeneratorKind::orange_skin;
    tr.n = 10000;
    tr.seed = 100;
    GeneratorSpec te = tr;
    te.n = 1000;
    te.seed = 101;
    const Dataset train_data = generate(tr);
    const Dataset test_data = generate(te);

    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 100;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.seed = 1;
    const TrainedModel tm = train(train_data, Arch::mlp2, cfg, &test_data);
    INFO("test accuracy " << tm.meta.test_accuracy);
    CHECK(tm.meta.test_accuracy > 0.70);
}
