// SPDX-License-Identifier: Apache-2.0
#include "patchlm/resampler.hpp"

#include "patchlm/errors.hpp"

namespace patchlm {

namespace {
constexpr double kInitStd = 0.02;
}

void ResamplerConfig::validate() const {
    if (n_queries == 0) throw DimensionError("resampler config: n_queries must be >= 1");
    if (d_model == 0 || d_model % n_heads != 0)
        throw DimensionError("resampler config: d_model must be divisible by n_heads");
    if (depth == 0) throw DimensionError("resampler config: depth must be >= 1");
}

Resampler Resampler::init(const ResamplerConfig& cfg, Rng& rng) {
    cfg.validate();
    Resampler r;
    r.cfg_ = cfg;
    r.queries_ = Tensor::randn({cfg.n_queries, cfg.d_model}, rng, kInitStd, true);
    r.layers_.resize(cfg.depth);
    for (auto& layer : r.layers_) {
        layer.ln_q_gain = Tensor::full({cfg.d_model}, 1.0, true);
        layer.ln_q_bias = Tensor::zeros({cfg.d_model}, true);
        layer.ln_f_gain = Tensor::full({cfg.d_model}, 1.0, true);
        layer.ln_f_bias = Tensor::zeros({cfg.d_model}, true);
        layer.attn = init_attention_proj(cfg.d_model, rng, kInitStd);
    }
    return r;
}

Tensor Resampler::resample(const PatchFeatures& feats) const {
    if (feats.tokens.cols() != cfg_.d_model)
        throw DimensionError("resample: feature width " + shape_str(feats.tokens.shape()) +
                             " does not match resampler width " + std::to_string(cfg_.d_model));
    // Pre-norm cross-attention with the residual on the query path.
    Tensor x = queries_;
    for (const auto& layer : layers_) {
        Tensor q = layer_norm(x, layer.ln_q_gain, layer.ln_q_bias);
        Tensor f = layer_norm(feats.tokens, layer.ln_f_gain, layer.ln_f_bias);
        x = add(x, attend(q, f, layer.attn, cfg_.n_heads, /*causal=*/false));
    }
    return x;
}

std::vector<Tensor> Resampler::resample_all(const std::vector<PatchFeatures>& locals,
                                            const PatchFeatures* global) const {
    std::vector<Tensor> segments;
    segments.reserve(locals.size() + (global ? 1 : 0));
    for (const auto& feats : locals) segments.push_back(resample(feats));
    if (global) segments.push_back(resample(*global));
    return segments;
}

NamedTensors Resampler::named_parameters() const {
    NamedTensors out;
    out.emplace_back("resampler/queries", queries_);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        const std::string lb = "resampler/layer" + std::to_string(li);
        out.emplace_back(lb + "/ln_q/gain", l.ln_q_gain);
        out.emplace_back(lb + "/ln_q/bias", l.ln_q_bias);
        out.emplace_back(lb + "/ln_f/gain", l.ln_f_gain);
        out.emplace_back(lb + "/ln_f/bias", l.ln_f_bias);
        out.emplace_back(lb + "/attn/wq", l.attn.wq);
        out.emplace_back(lb + "/attn/bq", l.attn.bq);
        out.emplace_back(lb + "/attn/wk", l.attn.wk);
        out.emplace_back(lb + "/attn/bk", l.attn.bk);
        out.emplace_back(lb + "/attn/wv", l.attn.wv);
        out.emplace_back(lb + "/attn/bv", l.attn.bv);
        out.emplace_back(lb + "/attn/wo", l.attn.wo);
        out.emplace_back(lb + "/attn/bo", l.attn.bo);
    }
    return out;
}

std::vector<Tensor> Resampler::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

void Resampler::set_requires_grad(bool flag) {
    for (auto& t : parameters()) {
        Tensor copy = t;
        copy.set_requires_grad(flag);
    }
}

}  // namespace patchlm
