// Serial reference kernels against their OpenMP counterparts.

#include "ridgeline/dynamics.hpp"
#include "ridgeline/features.hpp"
#include "ridgeline/hyper.hpp"
#include "ridgeline/kernels.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace ridgeline;

const Eigen::MatrixXd& bench_inputs() {
    static const Eigen::MatrixXd x = [] {
        const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 500.0, 20.0, 7);
        return ds.inputs();
    }();
    return x;
}

const Eigen::MatrixXd& bench_omega() {
    static const Eigen::MatrixXd omega = sample_frequencies(100, 6, 1);
    return omega;
}

const Eigen::MatrixXd& bench_features() {
    static const Eigen::MatrixXd f = kernels::serial::feature_matrix(bench_inputs(), bench_omega(), 1.5);
    return f;
}

void BM_FeatureMatrixSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::feature_matrix(bench_inputs(), bench_omega(), 1.5));
}

void BM_FeatureMatrixParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::feature_matrix(bench_inputs(), bench_omega(), 1.5));
}

void BM_GramSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::gram(bench_features()));
}

void BM_GramParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::gram(bench_features()));
}

void BM_CrossSerial(benchmark::State& state) {
    const Eigen::MatrixXd y = bench_inputs().leftCols(2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::cross(bench_features(), y));
}

void BM_CrossParallel(benchmark::State& state) {
    const Eigen::MatrixXd y = bench_inputs().leftCols(2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::cross(bench_features(), y));
}

void vs_grid_search(benchmark::State& state, Execution exec) {
    const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 50.0, 20.0, 3);
    const Dataset train = ds.slice(0, 700);
    const Dataset val = ds.slice(700, 300);
    const ModelTemplate tmpl{Variant::NP, 2, FeatureConfig{50, 1}, 9.81};
    const HyperGrid grid = default_vs_grid(tmpl, train);
    for (auto _ : state) benchmark::DoNotOptimize(fit_vs(tmpl, train, val, grid, exec).index);
}

void BM_FitVsSerial(benchmark::State& state) { vs_grid_search(state, Execution::serial); }
void BM_FitVsParallel(benchmark::State& state) { vs_grid_search(state, Execution::parallel); }

}  // namespace

BENCHMARK(BM_FeatureMatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FeatureMatrixParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitVsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitVsParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
