#include <benchmark/benchmark.h>

#include "fundus/clahe.hpp"
#include "fundus/rng.hpp"

namespace {

fundus::Plane random_plane(int w, int h, std::uint64_t seed) {
    fundus::Rng rng(seed);
    fundus::Plane plane(w, h);
    for (auto& v : plane.values) v = static_cast<std::uint8_t>(rng.next_below(256));
    return plane;
}

void BM_clahe(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto plane = random_plane(size, size, 7);
    fundus::ClaheParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::clahe(plane, params));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(plane.values.size()));
}
BENCHMARK(BM_clahe)->Arg(64)->Arg(256)->Arg(1024);

void BM_clahe_reference(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto plane = random_plane(size, size, 7);
    fundus::ClaheParams params;
    params.tile_rows = params.tile_cols = 2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::clahe_reference(plane, params));
    }
}
BENCHMARK(BM_clahe_reference)->Arg(32)->Arg(64);

void BM_clip_histogram(benchmark::State& state) {
    fundus::Rng rng(9);
    std::vector<std::uint32_t> hist(fundus::ClaheParams::kBins);
    for (auto& bin : hist) bin = static_cast<std::uint32_t>(rng.next_below(500));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::clip_histogram(hist, 64));
    }
}
BENCHMARK(BM_clip_histogram);

}  // namespace

BENCHMARK_MAIN();
