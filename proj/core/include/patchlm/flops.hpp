// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "patchlm/glyphs.hpp"
#include "patchlm/model.hpp"
#include "patchlm/optim.hpp"

namespace patchlm {

struct TrainParams {
    double lr = 1e-2;  // reference recipe uses 1e-5 at full scale
    double min_lr = 0.0;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    long warmup_steps = 30;  // reference 100
    long total_steps = 300;
    std::size_t batch_size = 8;  // reference 1024

    LrSchedule schedule() const {
        return LrSchedule{lr, warmup_steps, total_steps, min_lr};
    }
};

// One arm of a sweep: model wiring plus training recipe plus the synthetic
// task geometry.
struct RunConfig {
    std::string name = "run";
    ModelConfig model;
    TrainParams train;
    GlyphSceneSpec scene;
    // Representative prompt length for the analytic forward-pass count.
    std::size_t flops_prompt_len = 16;
    std::uint64_t seed = 0;
};

// Analytic multiply-add counts x2 for one forward pass over one image.
// Included: patch embedding, attention projections plus score and
// weighted-sum matmuls, MLP, LoRA branches, resampler, width projector, LM.
// Layer norms, softmax and activations are excluded; only ratios are
// comparable across conventions.
struct FlopsBreakdown {
    double encoder_base = 0.0;
    double lora = 0.0;
    double resampler = 0.0;
    double projector = 0.0;
    double lm = 0.0;

    double total() const { return encoder_base + lora + resampler + projector + lm; }
};

FlopsBreakdown count_flops_breakdown(const ModelConfig& cfg, std::size_t prompt_len);
double count_flops(const RunConfig& cfg);

// Exact element counts per namespace.
struct ParamBreakdown {
    std::size_t encoder_base = 0;
    std::size_t adapters = 0;
    std::size_t resampler = 0;
    std::size_t projector = 0;
    std::size_t lm = 0;

    std::size_t total() const { return encoder_base + adapters + resampler + projector + lm; }
};

ParamBreakdown count_params(const ModelConfig& cfg);

// The full-scale configuration the reference numbers are quoted at: 896x896
// input, 448 window, patch 14, a 48-layer/1664-wide encoder, 256 queries and
// a 32-layer/4096-wide language model. Used for the analytic cost claims.
RunConfig reference_scale_config();

}  // namespace patchlm
