// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "patchlm/checkpoint.hpp"
#include "patchlm/image.hpp"
#include "patchlm/nn.hpp"
#include "patchlm/partition.hpp"
#include "patchlm/tensor.hpp"

namespace patchlm {

// Toy defaults keep tests fast; reference values from the full-scale recipe
// are window 448, patch 14, attn_rank 16, mlp_rank 32 (see configs/).
struct EncoderConfig {
    Window window{64, 64};
    std::size_t patch_embed_size = 16;
    std::size_t depth = 2;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t d_mlp = 64;
    std::size_t attn_rank = 4;
    std::size_t mlp_rank = 8;
    // 0 selects alpha == rank, i.e. branch scale 1.
    double lora_alpha = 0.0;

    void validate() const;
    std::size_t token_rows() const { return window.height / patch_embed_size; }
    std::size_t token_cols() const { return window.width / patch_embed_size; }
    std::size_t tokens_per_crop() const { return token_rows() * token_cols(); }
    std::size_t patch_dim() const {
        return patch_embed_size * patch_embed_size * ImageTensor::kChannels;
    }
};

// One adapter holds a low-rank pair per adapted base matrix. Rank 0 for a
// group allocates nothing and disables adaptation of that group.
struct AdapterLayer {
    LoraPair q, k, v, o;
    LoraPair mlp_in, mlp_out;
};

struct Adapter {
    std::vector<AdapterLayer> layers;
};

// Per-grid-position adapters over one shared frozen encoder. Index of the
// local crop at (r, c) is r * cols + c; the global crop runs unadapted.
struct AdapterBank {
    std::vector<Adapter> adapters;

    std::size_t n_adapters() const { return adapters.size(); }
    const Adapter& at(std::size_t id) const;
    NamedTensors named_parameters() const;
    std::vector<Tensor> parameters() const;
};

AdapterBank make_adapter_bank(const EncoderConfig& cfg, std::size_t n_adapters, Rng& rng);
std::size_t adapter_param_count(const EncoderConfig& cfg, std::size_t n_adapters);

// Contract-level LoRA application: base(x) + (alpha/rank) * B(A(x)), base
// untouched. x rows are inputs; w is [d_in x d_out].
Tensor lora_apply(const Tensor& x, const Tensor& w, const LoraPair& adapter, double alpha);

struct CropSource {
    bool is_global = false;
    std::size_t row = 0;
    std::size_t col = 0;
};

// Fixed-length token embedding of one crop. Token count depends only on the
// config, never on image content.
struct PatchFeatures {
    Tensor tokens;  // [tokens_per_crop x d_model]
    CropSource source;
};

struct TrainabilityPolicy {
    bool base_frozen = true;
    bool adapters_trainable = true;
};

struct EncoderLayerWeights {
    Tensor ln1_gain, ln1_bias;
    AttentionProj attn;
    Tensor ln2_gain, ln2_bias;
    Tensor mlp_in_w, mlp_in_b;
    Tensor mlp_out_w, mlp_out_b;
};

// Pre-norm vision transformer shared by every crop. Exactly one copy of the
// base weights exists regardless of crop or adapter count.
class Encoder {
  public:
    static Encoder init(const EncoderConfig& cfg, Rng& rng);

    // Tokenize, add positions, run the blocks with the given adapter (null
    // for the unadapted/global path). The crop's token grid must match the
    // positional table; call interpolate_pos_embed first for other sizes.
    PatchFeatures encode(const ImageTensor& crop, const Adapter* adapter,
                         CropSource source = {}) const;

    // Bilinear resize of the 2-D positional table; enables the
    // single-large-input interpolation baseline.
    void interpolate_pos_embed(std::size_t new_rows, std::size_t new_cols);

    const EncoderConfig& config() const { return cfg_; }
    std::size_t pos_rows() const { return pos_rows_; }
    std::size_t pos_cols() const { return pos_cols_; }

    NamedTensors named_parameters() const;
    std::vector<Tensor> parameters() const;
    void set_base_requires_grad(bool flag);

  private:
    EncoderConfig cfg_;
    Tensor patch_embed_w_;  // [patch_dim x d_model]
    Tensor patch_embed_b_;
    Tensor pos_embed_;      // [pos_rows*pos_cols x d_model]
    std::size_t pos_rows_ = 0;
    std::size_t pos_cols_ = 0;
    std::vector<EncoderLayerWeights> layers_;
    Tensor ln_f_gain_, ln_f_bias_;
};

// Applies the freeze policy to the base encoder and the adapter bank.
void set_trainability(Encoder& encoder, AdapterBank& bank, const TrainabilityPolicy& policy);

}  // namespace patchlm
