// Serial reference implementations vs the OpenMP kernels on the hot paths:
// pair enumeration, dataset prediction, batch explanation and curve
// estimation. Run with --benchmark_filter=... to narrow down.

#include <benchmark/benchmark.h>

#include "astute/data.hpp"
#include "astute/explain.hpp"
#include "astute/metrics.hpp"
#include "astute/model.hpp"
#include "astute/robustness.hpp"
#include "astute/rng.hpp"

using namespace astute;

namespace {

const NormOrder kP2{2.0};

Dataset bench_data(std::size_t n) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::orange_skin;
    spec.n = n;
    spec.dim = 10;
    spec.seed = 42;
    return generate(spec);
}

Model bench_model() {
    MlpModel m;
    SeqRng rng(7);
    const std::vector<int> dims{10, 200, 200, 1};
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix W(dims[l + 1], dims[l]);
        for (auto& v : W.a) v = rng.gaussian() / std::sqrt(dims[l]);
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(dims[l + 1], 0.0);
    }
    return m;
}

PairSamplePlan bench_plan(const Dataset& data) {
    PairSamplePlan plan;
    plan.max_pairs = 200000;
    plan.radius = median_pairwise_distance(data, kP2, plan.max_pairs, 0);
    return plan;
}

void BM_median_serial(benchmark::State& state) {
    const Dataset data = bench_data(1500);
    for (auto _ : state)
        benchmark::DoNotOptimize(serial::median_pairwise_distance(data, kP2, 2000000, 0));
}

void BM_median_omp(benchmark::State& state) {
    const Dataset data = bench_data(1500);
    for (auto _ : state)
        benchmark::DoNotOptimize(median_pairwise_distance(data, kP2, 2000000, 0));
}

void BM_sample_pairs_serial(benchmark::State& state) {
    const Dataset data = bench_data(1500);
    const auto plan = bench_plan(data);
    for (auto _ : state) benchmark::DoNotOptimize(serial::sample_pairs(data, plan, kP2));
}

void BM_sample_pairs_omp(benchmark::State& state) {
    const Dataset data = bench_data(1500);
    const auto plan = bench_plan(data);
    for (auto _ : state) benchmark::DoNotOptimize(sample_pairs(data, plan, kP2));
}

void BM_predict_dataset_serial(benchmark::State& state) {
    const Dataset data = bench_data(4000);
    const Model m = bench_model();
    for (auto _ : state) benchmark::DoNotOptimize(serial::predict_dataset(m, data));
}

void BM_predict_dataset_omp(benchmark::State& state) {
    const Dataset data = bench_data(4000);
    const Model m = bench_model();
    for (auto _ : state) benchmark::DoNotOptimize(predict_dataset(m, data));
}

void BM_shap_exact_batch_serial(benchmark::State& state) {
    const Dataset data = bench_data(24);
    const Model m = bench_model();
    const Predictor f(m);
    ExplainerConfig cfg;
    cfg.id = ExplainerId::shap;
    for (auto _ : state) benchmark::DoNotOptimize(serial::explain_dataset(f, data, cfg));
}

void BM_shap_exact_batch_omp(benchmark::State& state) {
    const Dataset data = bench_data(24);
    const Model m = bench_model();
    const Predictor f(m);
    ExplainerConfig cfg;
    cfg.id = ExplainerId::shap;
    for (auto _ : state) benchmark::DoNotOptimize(explain_dataset(f, data, cfg));
}

void BM_plipschitz_serial(benchmark::State& state) {
    const Dataset data = bench_data(1000);
    const auto plan = bench_plan(data);
    const Model m = bench_model();
    const Predictor f(m);
    const auto grid = make_grid(0.1, 1.0, 0.1);
    for (auto _ : state)
        benchmark::DoNotOptimize(serial::estimate_plipschitz(f, data, plan, kP2, grid));
}

void BM_plipschitz_omp(benchmark::State& state) {
    const Dataset data = bench_data(1000);
    const auto plan = bench_plan(data);
    const Model m = bench_model();
    const Predictor f(m);
    const auto grid = make_grid(0.1, 1.0, 0.1);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_plipschitz(f, data, plan, kP2, grid));
}

}  // namespace

BENCHMARK(BM_median_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_median_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_pairs_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_pairs_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_dataset_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_dataset_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_shap_exact_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_shap_exact_batch_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_plipschitz_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_plipschitz_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
