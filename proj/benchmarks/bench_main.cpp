#include <benchmark/benchmark.h>

#include "convnet/layers.hpp"
#include "convnet/rng.hpp"
#include "convnet/tensor.hpp"

namespace {

convnet::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    convnet::Tensor t(std::move(shape));
    convnet::Rng rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
    return t;
}

void bench_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const convnet::Tensor a = random_tensor({n, n}, 1);
    const convnet::Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        convnet::Tensor c = convnet::matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(bench_matmul)->Arg(64)->Arg(128)->Arg(256);

void bench_conv_forward(benchmark::State& state) {
    const auto maps = static_cast<std::size_t>(state.range(0));
    convnet::Conv2d conv(3, maps, 5, 5);
    const convnet::Tensor x = random_tensor({8, 3, 32, 32}, 3);
    for (auto _ : state) {
        convnet::Tensor y = conv.forward(x, false);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(bench_conv_forward)->Arg(16)->Arg(64);

void bench_conv_backward(benchmark::State& state) {
    const auto maps = static_cast<std::size_t>(state.range(0));
    convnet::Conv2d conv(3, maps, 5, 5);
    const convnet::Tensor x = random_tensor({8, 3, 32, 32}, 3);
    convnet::Tensor y = conv.forward(x, true);
    const convnet::Tensor dy = random_tensor(y.shape(), 4);
    for (auto _ : state) {
        convnet::Tensor dx = conv.backward(dy);
        benchmark::DoNotOptimize(dx.data());
    }
}
BENCHMARK(bench_conv_backward)->Arg(16)->Arg(64);

void bench_maxpool(benchmark::State& state) {
    convnet::MaxPool pool(3, 3, 2);
    const convnet::Tensor x = random_tensor({32, 16, 32, 32}, 5);
    for (auto _ : state) {
        convnet::Tensor y = pool.forward(x, false);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(bench_maxpool);

} // namespace

BENCHMARK_MAIN();
