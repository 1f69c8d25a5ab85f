#include <benchmark/benchmark.h>

#include "slr/backbone.hpp"
#include "slr/dataset.hpp"
#include "slr/head.hpp"
#include "slr/quantize.hpp"
#include "slr/rng.hpp"
#include "slr/synth.hpp"

using namespace slr;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<float> data(shape_product(shape));
    for (float& v : data) v = float(rng.next_gaussian());
    return Tensor(std::move(shape), std::move(data));
}

void BM_Conv2dSame(benchmark::State& state) {
    const Tensor input = random_tensor({28, 28, 8}, 1);
    const Tensor kernel = random_tensor({3, 3, 8, 16}, 2);
    const Tensor bias = random_tensor({16}, 3);
    for (auto _ : state) {
        Tensor out = conv2d(input, kernel, bias.values(), 1, Padding::kSame);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_Conv2dSame);

void BM_DepthwiseSeparable(benchmark::State& state) {
    const Tensor input = random_tensor({28, 28, 16}, 4);
    const Tensor dk = random_tensor({3, 3, 16}, 5);
    const Tensor pk = random_tensor({1, 1, 16, 32}, 6);
    for (auto _ : state) {
        Tensor mid = depthwise_conv2d(input, dk, 1, Padding::kSame);
        Tensor out = pointwise_conv2d(mid, pk, {});
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_DepthwiseSeparable);

void BM_DeskForward(benchmark::State& state) {
    const BackboneSpec spec = desk_backbone();
    const WeightSet weights = init_weights(spec, 7);
    const Dataset ds = make_synthetic_dataset(1, 8);
    const Tensor image = to_tensor(ds.images[0]);
    for (auto _ : state) {
        auto out = forward(spec, weights, image);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_DeskForward);

void BM_HeadLogits(benchmark::State& state) {
    const std::size_t dim = std::size_t(state.range(0));
    SoftmaxHead head = zero_head(std::uint32_t(dim), asl_label_names());
    SplitMix64 rng(9);
    for (float& w : head.weights) w = float(rng.next_gaussian());
    std::vector<float> x(dim);
    for (float& v : x) v = float(rng.next_gaussian());
    for (auto _ : state) {
        auto logits = head_logits(head, x);
        benchmark::DoNotOptimize(logits.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HeadLogits)->Arg(32)->Arg(784)->Arg(1001)->Arg(2048);

void BM_QuantizeRoundTrip(benchmark::State& state) {
    const Tensor tensor = random_tensor({std::size_t(state.range(0))}, 10);
    for (auto _ : state) {
        QuantizedTensor q = quantize_tensor(tensor);
        Tensor back = dequantize_tensor(q);
        benchmark::DoNotOptimize(back.data());
    }
}
BENCHMARK(BM_QuantizeRoundTrip)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
