// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: dense ops, crop encoding, resampling
// and the end-to-end visual forward.

#include <benchmark/benchmark.h>

#include "patchlm/bench.hpp"
#include "patchlm/encoder.hpp"
#include "patchlm/model.hpp"
#include "patchlm/partition.hpp"
#include "patchlm/resampler.hpp"
#include "patchlm/tensor.hpp"

namespace {

using namespace patchlm;

void BM_Matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Tensor a = Tensor::randn({n, n}, rng, 1.0);
    Tensor b = Tensor::randn({n, n}, rng, 1.0);
    NoGradGuard no_grad;
    for (auto _ : state) {
        Tensor c = matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Tensor a = Tensor::randn({n, n}, rng, 1.0, true);
    Tensor b = Tensor::randn({n, n}, rng, 1.0, true);
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        Tensor loss = sum_all(matmul(a, b));
        loss.backward();
        benchmark::DoNotOptimize(a.grad().data());
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64);

void BM_EncodeCrop(benchmark::State& state) {
    EncoderConfig cfg;
    Rng rng(2);
    Encoder encoder = Encoder::init(cfg, rng);
    AdapterBank bank = make_adapter_bank(cfg, 1, rng);
    ImageTensor crop(cfg.window.height, cfg.window.width, 0.5);
    NoGradGuard no_grad;
    for (auto _ : state) {
        PatchFeatures f = encoder.encode(crop, &bank.at(0));
        benchmark::DoNotOptimize(f.tokens.data());
    }
}
BENCHMARK(BM_EncodeCrop);

void BM_Resample(benchmark::State& state) {
    ResamplerConfig cfg;
    Rng rng(3);
    Resampler resampler = Resampler::init(cfg, rng);
    PatchFeatures feats{Tensor::randn({16, cfg.d_model}, rng, 1.0), {}};
    NoGradGuard no_grad;
    for (auto _ : state) {
        Tensor seg = resampler.resample(feats);
        benchmark::DoNotOptimize(seg.data());
    }
}
BENCHMARK(BM_Resample);

void BM_Partition(benchmark::State& state) {
    ImageTensor img(896, 896, 0.25);
    Window win{448, 448};
    for (auto _ : state) {
        PatchGrid grid = partition(img, win);
        benchmark::DoNotOptimize(grid.locals.data());
    }
}
BENCHMARK(BM_Partition);

void BM_VisualForward(benchmark::State& state) {
    RunConfig cfg = desk_run_config();
    VlmModel model = VlmModel::init(cfg.model, 7);
    Rng rng(4);
    GlyphScene scene = random_scene(cfg.scene, rng);
    ImageTensor img = render_scene(scene);
    NoGradGuard no_grad;
    for (auto _ : state) {
        auto segments = model.forward_visual(img);
        benchmark::DoNotOptimize(segments.data());
    }
}
BENCHMARK(BM_VisualForward);

}  // namespace

BENCHMARK_MAIN();
