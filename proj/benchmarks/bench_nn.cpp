#include <benchmark/benchmark.h>

#include "fundus/nn/network.hpp"
#include "fundus/rng.hpp"

namespace {

fundus::Tensor random_input(int size, std::uint64_t seed) {
    fundus::Rng rng(seed);
    fundus::Tensor x({1, size, size});
    for (auto& v : x.data) v = rng.next_double();
    return x;
}

void BM_forward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto config = fundus::NetworkConfig::default_config(size, size, 1, 2);
    fundus::Model model(config);
    model.init_params(5);
    const auto x = random_input(size, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict_logits(x));
    }
}
BENCHMARK(BM_forward)->Arg(16)->Arg(32)->Arg(64);

void BM_forward_backward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto config = fundus::NetworkConfig::default_config(size, size, 1, 2);
    fundus::Model model(config);
    model.init_params(5);
    const auto x = random_input(size, 13);
    fundus::Rng dropout_rng(17);
    for (auto _ : state) {
        const fundus::Tensor logits = model.forward_train(x, dropout_rng);
        const auto grad = fundus::softmax_cross_entropy(logits.data, 1);
        fundus::Tensor dlogits({static_cast<int>(grad.dlogits.size())});
        dlogits.data = grad.dlogits;
        benchmark::DoNotOptimize(model.backward(dlogits));
        model.zero_grads();
    }
}
BENCHMARK(BM_forward_backward)->Arg(16)->Arg(32);

void BM_train_epoch(benchmark::State& state) {
    fundus::Rng rng(23);
    const int side = 16;
    fundus::FeatureSet data;
    data.image_width = side;
    data.image_height = side;
    data.image_channels = 1;
    data.num_classes = 2;
    data.features = fundus::FeatureMatrix(128, static_cast<std::size_t>(side) * side);
    for (auto& v : data.features.data) v = rng.next_double();
    for (std::size_t i = 0; i < data.features.rows; ++i) {
        data.labels.push_back(static_cast<int>(i % 2));
    }
    const auto config = fundus::NetworkConfig::default_config(side, side, 1, 2);
    fundus::TrainConfig tc;
    tc.epochs = 1;
    tc.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fundus::train(data, config, tc));
    }
    state.SetItemsProcessed(state.iterations() * data.features.rows);
}
BENCHMARK(BM_train_epoch);

}  // namespace

BENCHMARK_MAIN();
