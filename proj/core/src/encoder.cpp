// SPDX-License-Identifier: Apache-2.0
#include "patchlm/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "patchlm/errors.hpp"

namespace patchlm {

namespace {
constexpr double kInitStd = 0.02;
}

void EncoderConfig::validate() const {
    if (d_model == 0 || depth == 0 || n_heads == 0 || d_mlp == 0)
        throw DimensionError("encoder config: extents must be positive");
    if (d_model % n_heads != 0)
        throw DimensionError("encoder config: d_model " + std::to_string(d_model) +
                             " not divisible by n_heads " + std::to_string(n_heads));
    if (patch_embed_size == 0 || window.height % patch_embed_size != 0 ||
        window.width % patch_embed_size != 0)
        throw DimensionError("encoder config: window must be divisible by patch_embed_size");
}

const Adapter& AdapterBank::at(std::size_t id) const {
    if (id >= adapters.size())
        throw IndexError("adapter id " + std::to_string(id) + " out of range [0," +
                         std::to_string(adapters.size()) + ")");
    return adapters[id];
}

namespace {

LoraPair make_pair(std::size_t d_in, std::size_t d_out, std::size_t rank, Rng& rng) {
    LoraPair p;
    if (rank == 0) return p;
    p.a = Tensor::randn({d_in, rank}, rng, kInitStd, true);
    p.b = Tensor::zeros({rank, d_out}, true);
    return p;
}

void collect_pair(NamedTensors& out, const std::string& name, const LoraPair& p) {
    if (!p.defined()) return;
    out.emplace_back(name + "/a", p.a);
    out.emplace_back(name + "/b", p.b);
}

}  // namespace

AdapterBank make_adapter_bank(const EncoderConfig& cfg, std::size_t n_adapters, Rng& rng) {
    cfg.validate();
    AdapterBank bank;
    bank.adapters.resize(n_adapters);
    for (auto& adapter : bank.adapters) {
        adapter.layers.resize(cfg.depth);
        for (auto& layer : adapter.layers) {
            layer.q = make_pair(cfg.d_model, cfg.d_model, cfg.attn_rank, rng);
            layer.k = make_pair(cfg.d_model, cfg.d_model, cfg.attn_rank, rng);
            layer.v = make_pair(cfg.d_model, cfg.d_model, cfg.attn_rank, rng);
            layer.o = make_pair(cfg.d_model, cfg.d_model, cfg.attn_rank, rng);
            layer.mlp_in = make_pair(cfg.d_model, cfg.d_mlp, cfg.mlp_rank, rng);
            layer.mlp_out = make_pair(cfg.d_mlp, cfg.d_model, cfg.mlp_rank, rng);
        }
    }
    return bank;
}

std::size_t adapter_param_count(const EncoderConfig& cfg, std::size_t n_adapters) {
    const std::size_t d = cfg.d_model;
    const std::size_t per_layer = 4 * cfg.attn_rank * (d + d) +
                                  2 * cfg.mlp_rank * (d + cfg.d_mlp);
    return n_adapters * cfg.depth * per_layer;
}

NamedTensors AdapterBank::named_parameters() const {
    NamedTensors out;
    for (std::size_t ai = 0; ai < adapters.size(); ++ai) {
        const std::string base = "adapter/" + std::to_string(ai);
        for (std::size_t li = 0; li < adapters[ai].layers.size(); ++li) {
            const auto& layer = adapters[ai].layers[li];
            const std::string lb = base + "/layer" + std::to_string(li);
            collect_pair(out, lb + "/q", layer.q);
            collect_pair(out, lb + "/k", layer.k);
            collect_pair(out, lb + "/v", layer.v);
            collect_pair(out, lb + "/o", layer.o);
            collect_pair(out, lb + "/mlp_in", layer.mlp_in);
            collect_pair(out, lb + "/mlp_out", layer.mlp_out);
        }
    }
    return out;
}

std::vector<Tensor> AdapterBank::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

Tensor lora_apply(const Tensor& x, const Tensor& w, const LoraPair& adapter, double alpha) {
    return lora_linear(x, w, Tensor{}, &adapter, alpha);
}

Encoder Encoder::init(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    Encoder e;
    e.cfg_ = cfg;
    e.patch_embed_w_ = Tensor::randn({cfg.patch_dim(), cfg.d_model}, rng, kInitStd, true);
    e.patch_embed_b_ = Tensor::zeros({cfg.d_model}, true);
    e.pos_rows_ = cfg.token_rows();
    e.pos_cols_ = cfg.token_cols();
    e.pos_embed_ = Tensor::randn({e.pos_rows_ * e.pos_cols_, cfg.d_model}, rng, kInitStd, true);
    e.layers_.resize(cfg.depth);
    for (auto& layer : e.layers_) {
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
    e.ln_f_gain_ = Tensor::full({cfg.d_model}, 1.0, true);
    e.ln_f_bias_ = Tensor::zeros({cfg.d_model}, true);
    return e;
}

PatchFeatures Encoder::encode(const ImageTensor& crop, const Adapter* adapter,
                              CropSource source) const {
    const std::size_t p = cfg_.patch_embed_size;
    if (crop.height % p != 0 || crop.width % p != 0)
        throw DimensionError("encode: crop " + std::to_string(crop.height) + "x" +
                             std::to_string(crop.width) + " not divisible by patch size " +
                             std::to_string(p));
    const std::size_t grid_r = crop.height / p;
    const std::size_t grid_c = crop.width / p;
    if (grid_r != pos_rows_ || grid_c != pos_cols_)
        throw DimensionError("encode: token grid " + std::to_string(grid_r) + "x" +
                             std::to_string(grid_c) + " does not match positional table " +
                             std::to_string(pos_rows_) + "x" + std::to_string(pos_cols_) +
                             "; interpolate_pos_embed first");
    if (adapter != nullptr && adapter->layers.size() != cfg_.depth)
        throw DimensionError("encode: adapter depth mismatch");

    // Row-major sub-patches, pixels flattened (y, x, c) within each patch.
    const std::size_t n_tokens = grid_r * grid_c;
    const std::size_t patch_dim = cfg_.patch_dim();
    std::vector<double> flat(n_tokens * patch_dim);
    std::size_t token = 0;
    for (std::size_t ty = 0; ty < grid_r; ++ty) {
        for (std::size_t tx = 0; tx < grid_c; ++tx, ++token) {
            double* dst = flat.data() + token * patch_dim;
            std::size_t k = 0;
            for (std::size_t y = 0; y < p; ++y)
                for (std::size_t x = 0; x < p; ++x)
                    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c)
                        dst[k++] = crop.at(ty * p + y, tx * p + x, c);
        }
    }
    Tensor x = Tensor::from_data({n_tokens, patch_dim}, std::move(flat));
    x = add_rowvec(matmul(x, patch_embed_w_), patch_embed_b_);
    x = add(x, pos_embed_);

    const double alpha = cfg_.lora_alpha;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& layer = layers_[li];
        const AdapterLayer* al = adapter ? &adapter->layers[li] : nullptr;
        Tensor h = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
        AttentionLora lora;
        if (al) {
            lora.q = &al->q;
            lora.k = &al->k;
            lora.v = &al->v;
            lora.o = &al->o;
            lora.alpha = alpha;
        }
        x = add(x, attend(h, h, layer.attn, cfg_.n_heads, /*causal=*/false,
                          al ? &lora : nullptr));
        Tensor h2 = layer_norm(x, layer.ln2_gain, layer.ln2_bias);
        Tensor m = gelu(lora_linear(h2, layer.mlp_in_w, layer.mlp_in_b,
                                    al ? &al->mlp_in : nullptr, alpha));
        Tensor m2 = lora_linear(m, layer.mlp_out_w, layer.mlp_out_b,
                                al ? &al->mlp_out : nullptr, alpha);
        x = add(x, m2);
    }
    x = layer_norm(x, ln_f_gain_, ln_f_bias_);
    return PatchFeatures{std::move(x), source};
}

void Encoder::interpolate_pos_embed(std::size_t new_rows, std::size_t new_cols) {
    if (new_rows == 0 || new_cols == 0)
        throw DimensionError("interpolate_pos_embed: grid extents must be positive");
    if (new_rows == pos_rows_ && new_cols == pos_cols_) return;

    const std::size_t d = cfg_.d_model;
    std::vector<double> out(new_rows * new_cols * d);
    const double sy = new_rows > 1
                          ? static_cast<double>(pos_rows_ - 1) / static_cast<double>(new_rows - 1)
                          : 0.0;
    const double sx = new_cols > 1
                          ? static_cast<double>(pos_cols_ - 1) / static_cast<double>(new_cols - 1)
                          : 0.0;
    for (std::size_t r = 0; r < new_rows; ++r) {
        const double fy = static_cast<double>(r) * sy;
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, pos_rows_ - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t c = 0; c < new_cols; ++c) {
            const double fx = static_cast<double>(c) * sx;
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, pos_cols_ - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < d; ++ch) {
                const double top = pos_embed_.at(y0 * pos_cols_ + x0, ch) * (1.0 - wx) +
                                   pos_embed_.at(y0 * pos_cols_ + x1, ch) * wx;
                const double bot = pos_embed_.at(y1 * pos_cols_ + x0, ch) * (1.0 - wx) +
                                   pos_embed_.at(y1 * pos_cols_ + x1, ch) * wx;
                out[(r * new_cols + c) * d + ch] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    const bool rg = pos_embed_.requires_grad();
    pos_embed_ = Tensor::from_data({new_rows * new_cols, d}, std::move(out), rg);
    pos_rows_ = new_rows;
    pos_cols_ = new_cols;
}

NamedTensors Encoder::named_parameters() const {
    NamedTensors out;
    out.emplace_back("encoder/patch_embed/w", patch_embed_w_);
    out.emplace_back("encoder/patch_embed/b", patch_embed_b_);
    out.emplace_back("encoder/pos_embed", pos_embed_);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        const std::string lb = "encoder/layer" + std::to_string(li);
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
    out.emplace_back("encoder/ln_f/gain", ln_f_gain_);
    out.emplace_back("encoder/ln_f/bias", ln_f_bias_);
    return out;
}

std::vector<Tensor> Encoder::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

void Encoder::set_base_requires_grad(bool flag) {
    for (auto& t : parameters()) {
        Tensor copy = t;
        copy.set_requires_grad(flag);
    }
}

void set_trainability(Encoder& encoder, AdapterBank& bank, const TrainabilityPolicy& policy) {
    encoder.set_base_requires_grad(!policy.base_frozen);
    for (auto& t : bank.parameters()) {
        Tensor copy = t;
        copy.set_requires_grad(policy.adapters_trainable);
    }
}

}  // namespace patchlm
