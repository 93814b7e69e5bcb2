#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "astute/data.hpp"
#include "astute/io.hpp"

using namespace astute;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "astute_test_data";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("ground-truth scores and sigmoid") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-4.0) == doctest::Approx(0.01798620996209156).epsilon(1e-12));

    std::vector<double> x(10, 0.0);
    CHECK(orange_skin_score(x) == -4.0);
    CHECK(sigmoid(orange_skin_score(x)) == doctest::Approx(0.0180).epsilon(1e-2));

    std::fill(x.begin(), x.begin() + 4, 1.0);
    CHECK(orange_skin_score(x) == 0.0);
    CHECK(sigmoid(orange_skin_score(x)) == 0.5);

    // nonlinear additive at a hand point: -100 sin(2) + 2|1| + 1 + exp(-1)
    std::vector<double> y{1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const double expect = -100.0 * std::sin(2.0) + 2.0 + 1.0 + std::exp(-1.0);
    CHECK(nonlinear_additive_score(y) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("switch score routes through the branch feature block") {
    std::vector<double> x(10, 0.0);
    x[1] = 1.5;
    x[2] = -0.5;
    x[3] = 0.25;
    x[4] = 2.0;
    const double high0 = switch_score(x, true);
    // x[5..9] must not matter on the high branch
    x[5] = 9.0;
    x[6] = -3.0;
    x[7] = 1.0;
    x[8] = 0.5;
    x[9] = -7.0;
    CHECK(switch_score(x, true) == high0);
    // orange-skin rule over x[1..4]
    const double expect = 1.5 * 1.5 + 0.25 + 0.0625 + 4.0 - 4.0;
    CHECK(high0 == doctest::Approx(expect).epsilon(1e-14));

    const double low0 = switch_score(x, false);
    x[1] = -8.0;  // x[1..4] must not matter on the low branch
    CHECK(switch_score(x, false) == low0);
}

TEST_CASE("generator spec validation") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::switch_mixture;
    spec.n = 10;
    spec.dim = 5;
    CHECK_THROWS_WITH_AS(generate(spec), "switch requires dim >= 10", std::invalid_argument);
    spec.kind = GeneratorKind::orange_skin;
    spec.dim = 3;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.dim = 4;
    CHECK(generate(spec).dim == 4);
}

TEST_CASE("generated feature marginals are standard gaussian") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 100000;
    spec.dim = 10;
    spec.seed = 5;
    const Dataset data = generate(spec);
    REQUIRE(data.size() == spec.n);
    const FeatureStats st = compute_stats(data);
    for (int j = 0; j < data.dim; ++j) {
        CHECK(std::fabs(st.mean[j]) <= 0.02);
        CHECK(st.stddev[j] >= 0.98);
        CHECK(st.stddev[j] <= 1.02);
    }

    // label rate matches the mean of sigmoid(score)
    double expected = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        expected += sigmoid(orange_skin_score(data.row(i)));
        rate += data.labels[i];
    }
    expected /= static_cast<double>(data.size());
    rate /= static_cast<double>(data.size());
    CHECK(std::fabs(rate - expected) < 0.01);
}

TEST_CASE("switch mixture is balanced and bimodal") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::switch_mixture;
    spec.n = 100000;
    spec.dim = 10;
    spec.seed = 6;
    const Dataset data = generate(spec);
    double frac_pos = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) frac_pos += data.row(i)[0] > 0.0;
    frac_pos /= static_cast<double>(data.size());
    CHECK(frac_pos >= 0.48);
    CHECK(frac_pos <= 0.52);
}

TEST_CASE("generation is deterministic") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::nonlinear_additive;
    spec.n = 500;
    spec.seed = 77;
    const Dataset a = generate(spec);
    const Dataset b = generate(spec);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
}

TEST_CASE("csv load basics") {
    const auto dir = scratch_dir();
    const auto path = dir / "basic.csv";
    write_file(path, "f1,f2,y\n1.0,2.0,0\n3.5,-1.25,1\n0.5,0.0,0\n");

    const Dataset d = load_csv(path.string(), "y", false);
    CHECK(d.size() == 3);
    CHECK(d.dim == 2);
    CHECK(d.row(1)[0] == 3.5);
    CHECK(d.labels == std::vector<int>{0, 1, 0});

    // label column by index
    const Dataset d2 = load_csv(path.string(), "2", false);
    CHECK(d2.labels == d.labels);
}

TEST_CASE("csv standardization") {
    const auto dir = scratch_dir();
    const auto path = dir / "std.csv";
    write_file(path, "f1,f2,y\n1,10,0\n2,20,1\n3,30,0\n4,40,1\n");
    const Dataset d = load_csv(path.string(), "y", true);
    const FeatureStats st = compute_stats(d);
    for (int j = 0; j < d.dim; ++j) {
        CHECK(std::fabs(st.mean[j]) <= 1e-9);
        CHECK(st.stddev[j] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("csv error paths") {
    const auto dir = scratch_dir();

    const auto bad_label = dir / "bad_label.csv";
    write_file(bad_label, "f1,y\n1.0,0\n2.0,2\n");
    CHECK_THROWS_AS(load_csv(bad_label.string(), "y", false), std::invalid_argument);

    const auto bad_cell = dir / "bad_cell.csv";
    write_file(bad_cell, "f1,y\n1.0,0\nxyz,1\n");
    try {
        load_csv(bad_cell.string(), "y", false);
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("f1") != std::string::npos);
    }

    CHECK_THROWS_AS(load_csv((dir / "bad_label.csv").string(), "nope", false),
                    std::invalid_argument);
}

TEST_CASE("csv round trip with spec sidecar") {
    const auto dir = scratch_dir();
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 50;
    spec.seed = 3;
    const Dataset data = generate(spec);

    const auto path = dir / "round.csv";
    save_csv(data, path.string(), &spec);
    const Dataset back = load_csv(path.string(), "label", false);
    CHECK(back.features == data.features);
    CHECK(back.labels == data.labels);
    CHECK(fs::exists(dir / "round.spec.json"));
}

TEST_CASE("train test split is deterministic and preserves rows") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = 100;
    spec.seed = 9;
    const Dataset data = generate(spec);

    const auto [train, test] = train_test_split(data, 0.2, 4);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);

    const auto [train2, test2] = train_test_split(data, 0.2, 4);
    CHECK(train.features == train2.features);
    CHECK(test.labels == test2.labels);

    double total = 0.0, split_total = 0.0;
    for (double v : data.features) total += v;
    for (double v : train.features) split_total += v;
    for (double v : test.features) split_total += v;
    CHECK(split_total == doctest::Approx(total).epsilon(1e-12));

    CHECK_THROWS_AS(train_test_split(data, 0.0, 1), std::invalid_argument);
}
