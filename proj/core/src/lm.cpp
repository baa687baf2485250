// SPDX-License-Identifier: Apache-2.0
#include "patchlm/lm.hpp"

#include <algorithm>

#include "patchlm/errors.hpp"

namespace patchlm {

namespace {
constexpr double kInitStd = 0.02;
}

void LmConfig::validate() const {
    if (vocab_size == 0 || depth == 0 || d_model == 0 || d_mlp == 0 || max_seq == 0)
        throw DimensionError("lm config: extents must be positive");
    if (d_model % n_heads != 0)
        throw DimensionError("lm config: d_model not divisible by n_heads");
}

MultimodalLm MultimodalLm::init(const LmConfig& cfg, Rng& rng) {
    cfg.validate();
    MultimodalLm lm;
    lm.cfg_ = cfg;
    lm.token_embed_ = Tensor::randn({cfg.vocab_size, cfg.d_model}, rng, kInitStd, true);
    lm.pos_embed_ = Tensor::randn({cfg.max_seq, cfg.d_model}, rng, kInitStd, true);
    lm.separator_ = Tensor::randn({1, cfg.d_model}, rng, kInitStd, true);
    lm.layers_.resize(cfg.depth);
    for (auto& layer : lm.layers_) {
        layer.ln1_gain = Tensor::full({cfg.d_model}, 1.0, true);
        layer.ln1_bias = Tensor::zeros({cfg.d_model}, true);
        layer.attn = init_attention_proj(cfg.d_model, rng, kInitStd);
        layer.ln2_gain = Tensor::full({cfg.d_model}, 1.0, true);
        layer.ln2_bias = Tensor::zeros({cfg.d_model}, true);
        layer.mlp_in_w = Tensor::randn({cfg.d_model, cfg.d_mlp}, rng, kInitStd, true);
        layer.mlp_in_b = Tensor::zeros({cfg.d_mlp}, true);
        layer.mlp_out_w = Tensor::randn({cfg.d_mlp, cfg.d_model}, rng, kInitStd, true);
        layer.mlp_out_b = Tensor::zeros({cfg.d_model}, true);
    }
    lm.ln_f_gain_ = Tensor::full({cfg.d_model}, 1.0, true);
    lm.ln_f_bias_ = Tensor::zeros({cfg.d_model}, true);
    lm.head_w_ = Tensor::randn({cfg.d_model, cfg.vocab_size}, rng, kInitStd, true);
    lm.head_b_ = Tensor::zeros({cfg.vocab_size}, true);
    return lm;
}

Tensor MultimodalLm::assemble(const std::vector<Tensor>& segments,
                              std::span<const int> prompt_tokens) const {
    std::size_t visual_len = 0;
    for (const Tensor& seg : segments) {
        if (seg.cols() != cfg_.d_model)
            throw DimensionError("assemble: segment width " + shape_str(seg.shape()) +
                                 " does not match lm width " + std::to_string(cfg_.d_model));
        visual_len += seg.rows();
    }
    const std::size_t total = visual_len + (cfg_.use_separator ? 1 : 0) + prompt_tokens.size();
    if (total > cfg_.max_seq)
        throw CapacityError("assemble: sequence length " + std::to_string(total) +
                            " exceeds max_seq " + std::to_string(cfg_.max_seq) +
                            "; the six-local-patch cap bounds the visual span");

    std::vector<Tensor> parts(segments.begin(), segments.end());
    if (cfg_.use_separator) parts.push_back(separator_);
    if (!prompt_tokens.empty()) parts.push_back(embedding_rows(token_embed_, prompt_tokens));
    if (parts.empty()) throw UsageError("assemble: nothing to assemble");
    return concat_rows(parts);
}

Tensor MultimodalLm::logits_for(const Tensor& embedded) const {
    const std::size_t len = embedded.rows();
    if (len > cfg_.max_seq)
        throw CapacityError("logits: sequence length " + std::to_string(len) +
                            " exceeds max_seq " + std::to_string(cfg_.max_seq));
    Tensor x = add(embedded, slice_rows(pos_embed_, 0, len));
    for (const auto& layer : layers_) {
        Tensor h = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
        x = add(x, attend(h, h, layer.attn, cfg_.n_heads, /*causal=*/true));
        Tensor h2 = layer_norm(x, layer.ln2_gain, layer.ln2_bias);
        Tensor m = gelu(lora_linear(h2, layer.mlp_in_w, layer.mlp_in_b, nullptr, 0.0));
        x = add(x, lora_linear(m, layer.mlp_out_w, layer.mlp_out_b, nullptr, 0.0));
    }
    x = layer_norm(x, ln_f_gain_, ln_f_bias_);
    return add_rowvec(matmul(x, head_w_), head_b_);
}

Tensor MultimodalLm::lm_loss(const Tensor& assembled, std::span<const int> target_tokens) const {
    if (target_tokens.empty()) throw UsageError("lm_loss: empty target");
    const std::size_t prefix = assembled.rows();
    if (prefix == 0) throw UsageError("lm_loss: empty sequence");

    // Targets embed at the suffix; each one is predicted from the row before it.
    Tensor with_targets =
        concat_rows(std::vector<Tensor>{assembled, embedding_rows(token_embed_, target_tokens)});
    Tensor all_logits = logits_for(with_targets);
    std::vector<std::size_t> rows(target_tokens.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = prefix - 1 + i;
    return cross_entropy_rows(all_logits, target_tokens, rows);
}

std::string MultimodalLm::decode_greedy(const std::vector<Tensor>& segments,
                                        std::span<const int> prompt_tokens,
                                        std::size_t max_new) const {
    if (max_new == 0) throw UsageError("decode_greedy: max_new must be >= 1");
    NoGradGuard no_grad;
    Tensor prefix = assemble(segments, prompt_tokens);
    std::vector<int> generated;
    for (std::size_t step = 0; step < max_new; ++step) {
        Tensor seq = prefix;
        if (!generated.empty())
            seq = concat_rows(
                std::vector<Tensor>{prefix, embedding_rows(token_embed_, generated)});
        if (seq.rows() >= cfg_.max_seq) break;
        Tensor logits = logits_for(seq);
        const std::size_t last = logits.rows() - 1;
        int best = 0;
        double best_v = logits.at(last, 0);
        for (std::size_t j = 1; j < cfg_.vocab_size; ++j) {
            if (logits.at(last, j) > best_v) {
                best_v = logits.at(last, j);
                best = static_cast<int>(j);
            }
        }
        if (best == ByteTokenizer::kEndOfText) break;
        generated.push_back(best);
    }
    return ByteTokenizer::decode(generated);
}

NamedTensors MultimodalLm::named_parameters() const {
    NamedTensors out;
    out.emplace_back("lm/token_embed", token_embed_);
    out.emplace_back("lm/pos_embed", pos_embed_);
    out.emplace_back("lm/separator", separator_);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        const std::string lb = "lm/layer" + std::to_string(li);
        out.emplace_back(lb + "/ln1/gain", l.ln1_gain);
        out.emplace_back(lb + "/ln1/bias", l.ln1_bias);
        out.emplace_back(lb + "/attn/wq", l.attn.wq);
        out.emplace_back(lb + "/attn/bq", l.attn.bq);
        out.emplace_back(lb + "/attn/wk", l.attn.wk);
        out.emplace_back(lb + "/attn/bk", l.attn.bk);
        out.emplace_back(lb + "/attn/wv", l.attn.wv);
        out.emplace_back(lb + "/attn/bv", l.attn.bv);
        out.emplace_back(lb + "/attn/wo", l.attn.wo);
        out.emplace_back(lb + "/attn/bo", l.attn.bo);
        out.emplace_back(lb + "/ln2/gain", l.ln2_gain);
        out.emplace_back(lb + "/ln2/bias", l.ln2_bias);
        out.emplace_back(lb + "/mlp_in/w", l.mlp_in_w);
        out.emplace_back(lb + "/mlp_in/b", l.mlp_in_b);
        out.emplace_back(lb + "/mlp_out/w", l.mlp_out_w);
        out.emplace_back(lb + "/mlp_out/b", l.mlp_out_b);
    }
    out.emplace_back("lm/ln_f/gain", ln_f_gain_);
    out.emplace_back("lm/ln_f/bias", ln_f_bias_);
    out.emplace_back("lm/head/w", head_w_);
    out.emplace_back("lm/head/b", head_b_);
    return out;
}

std::vector<Tensor> MultimodalLm::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

void MultimodalLm::set_requires_grad(bool flag) {
    for (auto& t : parameters()) {
        Tensor copy = t;
        copy.set_requires_grad(flag);
    }
}

}  // namespace patchlm
