#include <benchmark/benchmark.h>

#include <cmath>

#include "exrisk/bounds.hpp"

namespace {

void BM_SharpTransform(benchmark::State& state) {
    auto psi = [](double d) { return std::sqrt(d); };
    double eps = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::sharp_transform(psi, eps));
        eps = eps < 1.0 ? eps * 1.0000001 : 0.1;
    }
}
BENCHMARK(BM_SharpTransform);

void BM_RateCurves(benchmark::State& state) {
    for (auto _ : state) {
        double acc = 0.0;
        for (std::size_t n = 100; n <= 100000; n *= 10) {
            acc += exrisk::rate_upper(n, 1.0) / exrisk::rate_lower(n, 1.0);
        }
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_RateCurves);

}  // namespace
