// SPDX-License-Identifier: Apache-2.0
#include "patchlm/flops.hpp"

namespace patchlm {

namespace {

struct CropPlan {
    std::size_t n_crops = 0;
    std::size_t n_adapted = 0;
    std::size_t tokens_per_crop = 0;
};

CropPlan crop_plan(const ModelConfig& cfg) {
    CropPlan plan;
    const std::size_t p = cfg.encoder.patch_embed_size;
    if (cfg.input_mode == InputMode::interpolate) {
        plan.n_crops = 1;
        plan.tokens_per_crop = (cfg.resolution_h / p) * (cfg.resolution_w / p);
        plan.n_adapted = cfg.adapter_mode == AdapterMode::none ? 0 : 1;
        return plan;
    }
    const std::size_t locals = cfg.n_local_patches();
    plan.n_crops = locals + (cfg.include_global ? 1 : 0);
    plan.tokens_per_crop = cfg.encoder.tokens_per_crop();
    switch (cfg.adapter_mode) {
        case AdapterMode::none: plan.n_adapted = 0; break;
        case AdapterMode::shared_one:
        case AdapterMode::per_patch:
            plan.n_adapted = locals + (cfg.include_global && cfg.adapt_global ? 1 : 0);
            break;
    }
    return plan;
}

}  // namespace

FlopsBreakdown count_flops_breakdown(const ModelConfig& cfg, std::size_t prompt_len) {
    const CropPlan plan = crop_plan(cfg);
    const auto& enc = cfg.encoder;
    const double d = static_cast<double>(enc.d_model);
    const double mlp = static_cast<double>(enc.d_mlp);
    const double depth = static_cast<double>(enc.depth);
    const double t = static_cast<double>(plan.tokens_per_crop);

    FlopsBreakdown out;

    // Encoder, per crop: patch embedding, then per layer QKV/O projections,
    // score and weighted-sum matmuls, and the two MLP matrices.
    double enc_madds = t * static_cast<double>(enc.patch_dim()) * d;
    enc_madds += depth * (4.0 * t * d * d + 2.0 * t * t * d + 2.0 * t * d * mlp);
    out.encoder_base = 2.0 * enc_madds * static_cast<double>(plan.n_crops);

    // LoRA branches on adapted crops: r * (d_in + d_out) madds per token per
    // adapted matrix.
    double lora_madds_per_token =
        4.0 * static_cast<double>(enc.attn_rank) * (d + d) +
        2.0 * static_cast<double>(enc.mlp_rank) * (d + mlp);
    out.lora = 2.0 * depth * t * lora_madds_per_token * static_cast<double>(plan.n_adapted);

    // Resampler, per crop: K/V from features, Q/O on the queries, scores and
    // weighted sums.
    const double q = static_cast<double>(cfg.resampler.n_queries);
    const double rdepth = static_cast<double>(cfg.resampler.depth);
    double res_madds = rdepth * (2.0 * t * d * d + 2.0 * q * d * d + 2.0 * q * t * d);
    out.resampler = 2.0 * res_madds * static_cast<double>(plan.n_crops);

    const double d_lm = static_cast<double>(cfg.lm.d_model);
    if (enc.d_model != cfg.lm.d_model)
        out.projector = 2.0 * q * static_cast<double>(plan.n_crops) * d * d_lm;

    // Language model over the assembled sequence.
    const double seq = q * static_cast<double>(plan.n_crops) +
                       (cfg.lm.use_separator ? 1.0 : 0.0) + static_cast<double>(prompt_len);
    const double lm_mlp = static_cast<double>(cfg.lm.d_mlp);
    const double lm_depth = static_cast<double>(cfg.lm.depth);
    double lm_madds = lm_depth * (4.0 * seq * d_lm * d_lm + 2.0 * seq * seq * d_lm +
                                  2.0 * seq * d_lm * lm_mlp);
    lm_madds += seq * d_lm * static_cast<double>(cfg.lm.vocab_size);
    out.lm = 2.0 * lm_madds;

    return out;
}

double count_flops(const RunConfig& cfg) {
    return count_flops_breakdown(cfg.model, cfg.flops_prompt_len).total();
}

ParamBreakdown count_params(const ModelConfig& cfg) {
    const auto& enc = cfg.encoder;
    const std::size_t d = enc.d_model;
    ParamBreakdown out;

    std::size_t pos_tokens;
    if (cfg.input_mode == InputMode::interpolate) {
        const std::size_t p = enc.patch_embed_size;
        pos_tokens = (cfg.resolution_h / p) * (cfg.resolution_w / p);
    } else {
        pos_tokens = enc.tokens_per_crop();
    }
    out.encoder_base = enc.patch_dim() * d + d;  // patch embedding + bias
    out.encoder_base += pos_tokens * d;
    out.encoder_base += enc.depth * (2 * d +                  // ln1
                                     4 * (d * d + d) +        // attention
                                     2 * d +                  // ln2
                                     d * enc.d_mlp + enc.d_mlp +
                                     enc.d_mlp * d + d);
    out.encoder_base += 2 * d;  // final norm

    out.adapters = adapter_param_count(enc, cfg.n_adapters());

    const auto& res = cfg.resampler;
    out.resampler = res.n_queries * d;
    out.resampler += res.depth * (4 * d + 4 * (d * d + d));

    if (enc.d_model != cfg.lm.d_model) out.projector = d * cfg.lm.d_model;

    const auto& lm = cfg.lm;
    const std::size_t ld = lm.d_model;
    out.lm = lm.vocab_size * ld;  // token table
    out.lm += lm.max_seq * ld;    // positions
    out.lm += ld;                 // separator
    out.lm += lm.depth * (2 * ld + 4 * (ld * ld + ld) + 2 * ld + ld * lm.d_mlp + lm.d_mlp +
                          lm.d_mlp * ld + ld);
    out.lm += 2 * ld;                       // final norm
    out.lm += ld * lm.vocab_size + lm.vocab_size;  // head
    return out;
}

RunConfig reference_scale_config() {
    RunConfig cfg;
    cfg.name = "reference-896";
    cfg.model.resolution_h = 896;
    cfg.model.resolution_w = 896;
    cfg.model.encoder.window = Window{448, 448};
    cfg.model.encoder.patch_embed_size = 14;
    cfg.model.encoder.depth = 48;
    cfg.model.encoder.d_model = 1664;
    cfg.model.encoder.n_heads = 16;
    cfg.model.encoder.d_mlp = 8192;
    cfg.model.encoder.attn_rank = 16;
    cfg.model.encoder.mlp_rank = 32;
    cfg.model.resampler.n_queries = 256;
    cfg.model.resampler.d_model = 1664;
    cfg.model.resampler.n_heads = 16;
    cfg.model.lm.depth = 32;
    cfg.model.lm.d_model = 4096;
    cfg.model.lm.n_heads = 32;
    cfg.model.lm.d_mlp = 11008;
    cfg.model.lm.vocab_size = 151936;
    cfg.model.lm.max_seq = 2048;
    cfg.model.adapter_mode = AdapterMode::per_patch;
    cfg.model.include_global = true;
    cfg.train.lr = 1e-5;
    cfg.train.warmup_steps = 100;
    cfg.train.batch_size = 1024;
    return cfg;
}

}  // namespace patchlm
