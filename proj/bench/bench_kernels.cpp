// Serial reference vs OpenMP kernels on the same inputs.

#include <numbers>

#include <benchmark/benchmark.h>

#include "cfslab/kernels.hpp"
#include "cfslab/random.hpp"

using namespace cfslab;

namespace {

std::vector<SpacetimePointOp> points(int m, Eigen::Index dim, int n) {
    Rng rng(7);
    std::vector<SpacetimePointOp> out;
    for (int i = 0; i < m; ++i) out.push_back(random_regular_point(dim, n, rng));
    return out;
}

DiracSeaConfig sea_config(int size) {
    DiracSeaConfig c;
    c.mass = 1.0;
    c.box_length = 2.0 * std::numbers::pi;
    c.cutoff_K = size;
    c.epsilon = 0.1;
    c.lattice = {size, size, 0.0, 2.0};
    return c;
}

void BM_PairTableSerial(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)), 8, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_table_serial(pts, kClassifyTol));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) + 1) / 2);
}

void BM_PairTableParallel(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)), 8, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_table_parallel(pts, kClassifyTol));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) + 1) / 2);
}

void BM_PairGradientsSerial(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)), 6, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_gradients_serial(pts));
}

void BM_PairGradientsParallel(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)), 6, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_gradients_parallel(pts));
}

void BM_CorrelationSerial(benchmark::State& state) {
    const auto c = sea_config(static_cast<int>(state.range(0)));
    const DiracSea sea = build_sea(c);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::correlation_points_serial(c, sea));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.num_lattice_points()));
}

void BM_CorrelationParallel(benchmark::State& state) {
    const auto c = sea_config(static_cast<int>(state.range(0)));
    const DiracSea sea = build_sea(c);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::correlation_points_parallel(c, sea));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.num_lattice_points()));
}

}  // namespace

BENCHMARK(BM_PairTableSerial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairTableParallel)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PairGradientsSerial)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairGradientsParallel)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CorrelationSerial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelationParallel)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
