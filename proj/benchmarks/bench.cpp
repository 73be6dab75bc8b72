#include <benchmark/benchmark.h>

#include "vqlab/models.hpp"
#include "vqlab/rng.hpp"
#include "vqlab/scene.hpp"

using namespace vqlab;

namespace {

Tensor randomImages(std::size_t batch, int side, std::uint64_t seed) {
    Tensor t({batch, static_cast<std::size_t>(side), static_cast<std::size_t>(side), 1});
    Rng rng(seed);
    for (auto& v : t.values()) v = rng.uniform(0.0, 1.0);
    return t;
}

void BM_SceneCompose(benchmark::State& state) {
    Rng rng(1);
    for (auto _ : state) {
        auto spec = composeScene({1, 4}, {4, 16}, rng.nextU64());
        benchmark::DoNotOptimize(spec);
    }
}
BENCHMARK(BM_SceneCompose);

void BM_SceneRasterize(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto spec = composeScene({1, 1}, {10, 10}, 7);
    for (auto _ : state) {
        auto img = rasterize(spec, side, side);
        benchmark::DoNotOptimize(img);
    }
}
BENCHMARK(BM_SceneRasterize)->Arg(40)->Arg(100);

void BM_EncoderForward(benchmark::State& state) {
    ModelConfig c;
    c.imageSize = static_cast<int>(state.range(0));
    c.encoderDim = static_cast<std::size_t>(state.range(1));
    const Sequential enc = buildEncoder(c.imageSize, c);
    ParamStore params;
    Rng rng(1);
    enc.initParams(params, rng);
    const Tensor images = randomImages(8, c.imageSize, 2);
    for (auto _ : state) {
        auto acts = enc.forward(params, images);
        benchmark::DoNotOptimize(acts);
    }
}
BENCHMARK(BM_EncoderForward)->Args({40, 24})->Args({100, 64});

void BM_MultiTaskStep(benchmark::State& state) {
    ModelConfig c;
    c.imageSize = static_cast<int>(state.range(0));
    c.encoderDim = static_cast<std::size_t>(state.range(1));
    MultiTaskNet net(buildModelSpec(ModelVariant::MultiTaskProp, TaskId::SetComp, c));
    ParamStore params;
    Rng rng(1);
    net.initParams(params, rng);
    const Tensor images = randomImages(8, c.imageSize, 2);
    std::vector<Tensor> targets;
    Rng trng(3);
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const std::size_t C = taskClassCount(net.spec().taskOrder[k]);
        Tensor t({8, C});
        for (std::size_t b = 0; b < 8; ++b) t[b * C + trng.below(C)] = 1.0;
        targets.push_back(std::move(t));
    }
    const std::vector<double> weights(net.numTasks(), 1.0);
    for (auto _ : state) {
        MultiTaskNet::ForwardCache cache;
        const auto out = net.forward(params, images, &cache);
        const auto loss = multiTaskLoss(out, targets, weights);
        net.backward(params, cache, loss.probGrads);
        params.sgdStep(0.01);
        benchmark::DoNotOptimize(params);
    }
}
BENCHMARK(BM_MultiTaskStep)->Args({40, 24})->Args({100, 64});

void BM_QuantifierDistribution(benchmark::State& state) {
    const QuantifierModel m = calibrateQuantifierModel();
    double p = 0.0;
    for (auto _ : state) {
        p += 0.001;
        if (p > 1.0) p = 0.0;
        auto d = m.distribution(p);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_QuantifierDistribution);

}  // namespace

BENCHMARK_MAIN();
