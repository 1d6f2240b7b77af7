#include <benchmark/benchmark.h>

#include "exrisk/assouad.hpp"
#include "exrisk/bump.hpp"

namespace {

exrisk::AssouadParams bench_params() {
    exrisk::AssouadParams p;
    p.d = 2;
    p.q = 4;
    p.m = 16;
    p.w = 0.003;
    p.r = 1.0;
    p.alpha = 1.0;
    p.sigma.assign(16, 1);
    p.residual_region = exrisk::AssouadParams::default_residual_region(2);
    return p;
}

void BM_BumpH(benchmark::State& state) {
    exrisk::default_bump();  // build the table outside the timed loop
    double t = 0.26;
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::bump_h(t));
        t += 1e-9;
    }
}
BENCHMARK(BM_BumpH);

void BM_Sample(benchmark::State& state) {
    const auto params = bench_params();
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::sample(params, n, seed++));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Sample)->Arg(1024)->Arg(16384);

void BM_EtaSigma(benchmark::State& state) {
    const auto params = bench_params();
    const std::vector<double> x{0.11, 0.64};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::eta_sigma(params, x));
    }
}
BENCHMARK(BM_EtaSigma);

}  // namespace
