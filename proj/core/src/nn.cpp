// SPDX-License-Identifier: Apache-2.0
#include "patchlm/nn.hpp"

#include <cmath>
#include <vector>

#include "patchlm/errors.hpp"

namespace patchlm {

Tensor lora_linear(const Tensor& x, const Tensor& w, const Tensor& bias,
                   const LoraPair* lora, double alpha) {
    Tensor out = matmul(x, w);
    if (bias.defined()) out = add_rowvec(out, bias);
    if (lora != nullptr && lora->defined() && lora->rank() > 0) {
        const double r = static_cast<double>(lora->rank());
        const double s = (alpha == 0.0 ? r : alpha) / r;
        out = add(out, scale(matmul(matmul(x, lora->a), lora->b), s));
    }
    return out;
}

Tensor attend(const Tensor& q_src, const Tensor& kv_src, const AttentionProj& proj,
              std::size_t n_heads, bool causal, const AttentionLora* lora) {
    const std::size_t d = proj.wq.extent(1);
    if (d % n_heads != 0)
        throw DimensionError("attend: d_model " + std::to_string(d) +
                             " not divisible by " + std::to_string(n_heads) + " heads");
    if (q_src.cols() != proj.wq.extent(0) || kv_src.cols() != proj.wk.extent(0))
        throw DimensionError("attend: input width mismatch, q " + shape_str(q_src.shape()) +
                             " kv " + shape_str(kv_src.shape()));
    if (causal && q_src.rows() != kv_src.rows())
        throw DimensionError("attend: causal attention requires equal query/key counts");

    const AttentionLora none{};
    const AttentionLora& lr = lora ? *lora : none;
    Tensor q = lora_linear(q_src, proj.wq, proj.bq, lr.q, lr.alpha);
    Tensor k = lora_linear(kv_src, proj.wk, proj.bk, lr.k, lr.alpha);
    Tensor v = lora_linear(kv_src, proj.wv, proj.bv, lr.v, lr.alpha);

    const std::size_t head_dim = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<Tensor> heads;
    heads.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
        Tensor qh = slice_cols(q, h * head_dim, (h + 1) * head_dim);
        Tensor kh = slice_cols(k, h * head_dim, (h + 1) * head_dim);
        Tensor vh = slice_cols(v, h * head_dim, (h + 1) * head_dim);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        Tensor weights = causal ? softmax_causal(scores) : softmax_rows(scores);
        heads.push_back(matmul(weights, vh));
    }
    Tensor ctx = concat_cols(heads);
    return lora_linear(ctx, proj.wo, proj.bo, lr.o, lr.alpha);
}

AttentionProj init_attention_proj(std::size_t d_model, Rng& rng, double init_std) {
    AttentionProj p;
    p.wq = Tensor::randn({d_model, d_model}, rng, init_std, true);
    p.bq = Tensor::zeros({d_model}, true);
    p.wk = Tensor::randn({d_model, d_model}, rng, init_std, true);
    p.bk = Tensor::zeros({d_model}, true);
    p.wv = Tensor::randn({d_model, d_model}, rng, init_std, true);
    p.bv = Tensor::zeros({d_model}, true);
    p.wo = Tensor::randn({d_model, d_model}, rng, init_std, true);
    p.bo = Tensor::zeros({d_model}, true);
    return p;
}

}  // namespace patchlm
