// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "patchlm/tensor.hpp"

namespace patchlm {

// Low-rank adapter factors for one base matrix: a [d_in x r], b [r x d_out].
// b starts at zero so an untrained adapter leaves the base path untouched.
struct LoraPair {
    Tensor a;
    Tensor b;

    bool defined() const { return a.defined() && b.defined(); }
    std::size_t rank() const { return a.extent(1); }
};

// x . w (+ bias) with an optional low-rank branch scaled by alpha / rank.
// A null or rank-0 adapter returns the base path exactly.
Tensor lora_linear(const Tensor& x, const Tensor& w, const Tensor& bias,
                   const LoraPair* lora, double alpha);

// Q/K/V/output projections of one attention block.
struct AttentionProj {
    Tensor wq, bq;
    Tensor wk, bk;
    Tensor wv, bv;
    Tensor wo, bo;
};

// Optional adapters for the four attention projections.
struct AttentionLora {
    const LoraPair* q = nullptr;
    const LoraPair* k = nullptr;
    const LoraPair* v = nullptr;
    const LoraPair* o = nullptr;
    double alpha = 0.0;
};

// Multi-head scaled dot-product attention of q_src rows over kv_src rows.
// Self-attention passes the same tensor for both; `causal` restricts row i
// to keys 0..i and requires q_src and kv_src to have equal row counts.
Tensor attend(const Tensor& q_src, const Tensor& kv_src, const AttentionProj& proj,
              std::size_t n_heads, bool causal, const AttentionLora* lora = nullptr);

AttentionProj init_attention_proj(std::size_t d_model, Rng& rng, double init_std);

}  // namespace patchlm
