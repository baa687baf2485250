// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "patchlm/checkpoint.hpp"
#include "patchlm/nn.hpp"
#include "patchlm/tensor.hpp"
#include "patchlm/tokenizer.hpp"

namespace patchlm {

struct LmConfig {
    std::size_t vocab_size = ByteTokenizer::kVocabSize;
    std::size_t depth = 2;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t d_mlp = 64;
    // Must cover visual tokens plus the longest rendered text; overflow is a
    // hard error mirroring the model's input-length limit.
    std::size_t max_seq = 512;
    // One learned embedding between the visual span and the text span;
    // switchable off for ablation.
    bool use_separator = true;

    void validate() const;
};

// Toy causal decoder over byte tokens with visual segments prepended.
// Sequence layout: [local segments row-major][global segment][separator]
// [prompt][targets during training]; positions run over the whole sequence.
class MultimodalLm {
  public:
    static MultimodalLm init(const LmConfig& cfg, Rng& rng);

    // Visual segments + separator + prompt embeddings, no positions yet.
    // Length = sum(segment rows) + 1 + prompt length (with separator on).
    Tensor assemble(const std::vector<Tensor>& segments,
                    std::span<const int> prompt_tokens) const;

    // Positions, causal blocks, vocab projection. [L x vocab].
    Tensor logits_for(const Tensor& embedded) const;

    // Mean cross-entropy over target positions only; visual and prompt
    // positions carry no loss.
    Tensor lm_loss(const Tensor& assembled, std::span<const int> target_tokens) const;

    // Deterministic argmax continuation, stopping at end-of-text or max_new.
    std::string decode_greedy(const std::vector<Tensor>& segments,
                              std::span<const int> prompt_tokens, std::size_t max_new) const;

    const LmConfig& config() const { return cfg_; }

    NamedTensors named_parameters() const;
    std::vector<Tensor> parameters() const;
    void set_requires_grad(bool flag);

  private:
    struct Layer {
        Tensor ln1_gain, ln1_bias;
        AttentionProj attn;
        Tensor ln2_gain, ln2_bias;
        Tensor mlp_in_w, mlp_in_b;
        Tensor mlp_out_w, mlp_out_b;
    };

    LmConfig cfg_;
    Tensor token_embed_;  // [vocab x d_model]
    Tensor pos_embed_;    // [max_seq x d_model]
    Tensor separator_;    // [1 x d_model]
    std::vector<Layer> layers_;
    Tensor ln_f_gain_, ln_f_bias_;
    Tensor head_w_;  // [d_model x vocab]
    Tensor head_b_;
};

}  // namespace patchlm
