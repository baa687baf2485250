// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "patchlm/checkpoint.hpp"
#include "patchlm/encoder.hpp"
#include "patchlm/nn.hpp"
#include "patchlm/tensor.hpp"

namespace patchlm {

// Reference n_queries is 256; desk-scale tests run 8.
struct ResamplerConfig {
    std::size_t n_queries = 8;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t depth = 1;

    void validate() const;
};

// One shared cross-attention stack: learned queries attend over a crop's
// encoder tokens and always emit exactly n_queries rows. A single instance
// serves every crop.
class Resampler {
  public:
    static Resampler init(const ResamplerConfig& cfg, Rng& rng);

    // Output row i is query i's attention over all feature tokens.
    Tensor resample(const PatchFeatures& feats) const;

    // Locals in grid order, then the global segment when present.
    std::vector<Tensor> resample_all(const std::vector<PatchFeatures>& locals,
                                     const PatchFeatures* global) const;

    const ResamplerConfig& config() const { return cfg_; }
    Tensor queries() const { return queries_; }

    NamedTensors named_parameters() const;
    std::vector<Tensor> parameters() const;
    void set_requires_grad(bool flag);

  private:
    struct Layer {
        Tensor ln_q_gain, ln_q_bias;
        Tensor ln_f_gain, ln_f_bias;
        AttentionProj attn;
    };

    ResamplerConfig cfg_;
    Tensor queries_;  // [n_queries x d_model]
    std::vector<Layer> layers_;
};

}  // namespace patchlm
