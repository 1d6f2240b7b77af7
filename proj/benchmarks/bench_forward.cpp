#include <benchmark/benchmark.h>

#include "exrisk/builders.hpp"
#include "exrisk/network.hpp"
#include "exrisk/rng.hpp"

namespace {

void BM_Forward(benchmark::State& state) {
    const std::size_t width = static_cast<std::size_t>(state.range(0));
    std::vector<std::size_t> widths(3, width);
    exrisk::NetworkSpec net = exrisk::make_network(2, widths, 8.0);
    exrisk::Rng rng(1);
    exrisk::initialize_weights(net, rng);
    const std::vector<double> x{0.3, -0.7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::forward(net, x));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Forward)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_Gradient(benchmark::State& state) {
    const std::size_t width = static_cast<std::size_t>(state.range(0));
    std::vector<std::size_t> widths(3, width);
    exrisk::NetworkSpec net = exrisk::make_network(2, widths, 8.0);
    exrisk::Rng rng(1);
    exrisk::initialize_weights(net, rng);
    std::vector<exrisk::LabeledSample> batch;
    for (int i = 0; i < 64; ++i) {
        exrisk::LabeledSample s;
        s.x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        s.y = rng.bernoulli(0.5) ? 1 : 0;
        batch.push_back(s);
    }
    const exrisk::LossProfile loss{8.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::gradient(net, batch, loss));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gradient)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void BM_MulNetworkForward(benchmark::State& state) {
    const exrisk::ConstructiveNet mul =
        exrisk::build_mul_network(1.0, static_cast<std::size_t>(state.range(0)));
    const std::vector<double> x{0.42, -0.77};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exrisk::forward(mul.net, x));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MulNetworkForward)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

}  // namespace
