#include <benchmark/benchmark.h>

#include "fundus/rng.hpp"
#include "fundus/smote.hpp"

namespace {

struct Problem {
    fundus::FeatureMatrix X;
    std::vector<int> labels;
};

// 10:1 two-class problem with `minority` minority rows of width `dims`.
Problem imbalanced(std::size_t minority, std::size_t dims) {
    fundus::Rng rng(11);
    Problem p;
    const std::size_t n = minority * 11;
    p.X = fundus::FeatureMatrix(n, dims);
    for (auto& v : p.X.data) v = rng.uniform(0.0, 1.0);
    p.labels.assign(n, 0);
    for (std::size_t i = 0; i < minority; ++i) p.labels[i * 11] = 1;
    return p;
}

void BM_knn_minority(benchmark::State& state) {
    const auto p = imbalanced(static_cast<std::size_t>(state.range(0)), 256);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::knn_minority(p.X, p.labels, 1, 5));
    }
}
BENCHMARK(BM_knn_minority)->Arg(32)->Arg(128)->Arg(512);

void BM_smote(benchmark::State& state) {
    const auto p = imbalanced(static_cast<std::size_t>(state.range(0)), 256);
    fundus::SmoteParams params;
    params.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::smote(p.X, p.labels, params));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}
BENCHMARK(BM_smote)->Arg(32)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
