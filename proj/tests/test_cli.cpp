#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "astute_test_cli";

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run(const std::string& args) {
    const fs::path so = kScratch / "stdout.txt";
    const fs::path se = kScratch / "stderr.txt";
    const std::string cmd = std::string(ASTUTE_CLI_PATH) + " " + args + " >" +
                            so.string() + " 2>" + se.string();
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.code = status >= 0 ? (status >> 8) & 0xff : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

std::string path(const char* name) { return (kScratch / name).string(); }

}  // namespace

TEST_CASE("prepare scratch") {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
    CHECK(fs::exists(kScratch));
}

TEST_CASE("gen writes csv with sidecar and a summary") {
    const auto r = run("gen --kind orange_skin --n 120 --seed 7 --out " + path("os.csv"));
    CHECK(r.code == 0);
    CHECK(r.out.find("n=120") != std::string::npos);
    CHECK(fs::exists(path("os.csv")));
    CHECK(fs::exists(path("os.spec.json")));

    std::ifstream in(path("os.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,label");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 120);
}

TEST_CASE("gen is byte-identical across reruns") {
    run("gen --kind switch --n 60 --seed 3 --out " + path("sw1.csv"));
    run("gen --kind switch --n 60 --seed 3 --out " + path("sw2.csv"));
    CHECK(slurp(path("sw1.csv")) == slurp(path("sw2.csv")));
    CHECK(!slurp(path("sw1.csv")).empty());
}

TEST_CASE("gen rejects invalid dimensions with a structured error") {
    const auto r = run("gen --kind switch --dim 5 --n 10 --out " + path("bad.csv"));
    CHECK(r.code == 2);
    CHECK(r.err.find("\"type\":\"validation\"") != std::string::npos);
    CHECK(r.err.find("switch requires dim >= 10") != std::string::npos);
}

TEST_CASE("full command chain on a small dataset") {
    REQUIRE(run("gen --kind orange_skin --n 300 --seed 11 --out " + path("train.csv")).code == 0);
    REQUIRE(run("gen --kind orange_skin --n 80 --seed 12 --out " + path("test.csv")).code == 0);

    const auto tr = run("train --data " + path("train.csv") + " --test-data " +
                        path("test.csv") +
                        " --arch linear --epochs 6 --batch-size 30 --lr 0.3 --seed 2 "
                        "--out " + path("lin.json"));
    CHECK(tr.code == 0);
    CHECK(tr.out.find("test_accuracy") != std::string::npos);

    CHECK(run("explain --model " + path("lin.json") + " --data " + path("test.csv") +
              " --explainer shap --out " + path("shap.csv")).code == 0);
    CHECK(fs::exists(path("shap.csv.meta.json")));

    CHECK(run("lipschitz --model " + path("lin.json") + " --data " + path("test.csv") +
              " --subject os/linear --out " + path("lip.csv")).code == 0);
    CHECK(run("astuteness --attr " + path("shap.csv") + " --data " + path("test.csv") +
              " --subject os/linear/shap --out " + path("ast.csv")).code == 0);
    CHECK(run("bound --profile " + path("lip.csv") +
              " --explainer shap --subject os/linear/shap --out " + path("bnd.csv")).code == 0);

    const auto rep = run("report --curves " + path("ast.csv") + " " + path("bnd.csv") +
                         " --out " + path("report"));
    CHECK(rep.code == 0);
    CHECK(fs::exists(path("report") + "/report.json"));
    CHECK(fs::exists(path("report") + "/report.csv"));
    CHECK(fs::exists(path("report") + "/os_linear_shap.svg"));

    const auto ver = run("verify --model " + path("lin.json") + " --data " +
                         path("test.csv") + " --explainer remove_individual --out " +
                         path("verify.json"));
    CHECK(ver.code == 0);
    CHECK(ver.out.find("violations=0") != std::string::npos);
    CHECK(fs::exists(path("verify.json")));
}

TEST_CASE("sampled explanation runs are byte-identical with a fixed seed") {
    const std::string base = "explain --model " + path("lin.json") + " --data " +
                             path("test.csv") +
                             " --explainer rise --mode sampled --n-masks 200 --seed 5 ";
    CHECK(run(base + "--out " + path("r1.csv")).code == 0);
    CHECK(run(base + "--out " + path("r2.csv")).code == 0);
    CHECK(slurp(path("r1.csv")) == slurp(path("r2.csv")));
}

TEST_CASE("report without curves is a validation error") {
    const auto r = run("report --out " + path("empty_report"));
    CHECK(r.code == 2);
    CHECK(r.err.find("\"type\":\"validation\"") != std::string::npos);
}

TEST_CASE("missing input surfaces as a runtime error") {
    const auto r = run("train --data " + path("nope.csv") + " --arch linear --out " +
                       path("x.json"));
    CHECK(r.code == 3);
    CHECK(r.err.find("\"type\":\"runtime\"") != std::string::npos);
}

TEST_CASE("unknown flag is a validation error") {
    const auto r = run("gen --no-such-flag");
    CHECK(r.code == 2);
    CHECK(r.err.find("\"type\":\"validation\"") != std::string::npos);
}

TEST_CASE("pipeline smoke with report outputs") {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({
  "dataset": {"kind": "orange_skin", "n_train": 400, "n_test": 60, "dim": 6, "seed": 5},
  "models": [{"arch": "linear", "epochs": 5, "batch_size": 40, "learning_rate": 0.3, "seed": 1}],
  "explainers": [{"id": "shap"}, {"id": "remove_individual"}],
  "pairs": {"max_pairs": 5000, "seed": 9},
  "out_dir": ")" << path("pipe") << R"("
})";
    cfg.close();

    const auto r = run("pipeline --config " + path("cfg.json"));
    CHECK(r.code == 0);
    CHECK(fs::exists(path("pipe") + "/report/report.json"));
    CHECK(fs::exists(path("pipe") + "/report/per_seed.json"));
    CHECK(fs::exists(path("pipe") + "/curves"));
    CHECK(r.out.find("auc_emp") != std::string::npos);
}
