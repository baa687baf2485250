// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "patchlm/encoder.hpp"
#include "patchlm/lm.hpp"
#include "patchlm/optim.hpp"
#include "patchlm/partition.hpp"
#include "patchlm/resampler.hpp"
#include "patchlm/templates.hpp"

namespace patchlm {

enum class AdapterMode { none, shared_one, per_patch };
enum class InputMode { patch, interpolate };

std::string to_string(AdapterMode mode);
AdapterMode adapter_mode_from_string(const std::string& name);
std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& name);

struct ModelConfig {
    std::size_t resolution_h = 128;
    std::size_t resolution_w = 128;
    EncoderConfig encoder;
    ResamplerConfig resampler;
    LmConfig lm;
    AdapterMode adapter_mode = AdapterMode::per_patch;
    // interpolate = the positional-interpolation baseline: the whole image as
    // one encoder input, no sliding window.
    InputMode input_mode = InputMode::patch;
    bool include_global = true;
    // Open switch: give the global crop its own adapter (off by default; the
    // adapter count then equals the local patch count).
    bool adapt_global = false;
    TrainabilityPolicy policy;
    std::size_t max_local_patches = kMaxLocalPatches;

    void validate() const;
    std::pair<std::size_t, std::size_t> local_grid() const;
    std::size_t n_local_patches() const;
    std::size_t n_adapters() const;
};

struct TrainExample {
    ImageTensor image;
    InstructionSample sample;
};

// The assembled system: shared encoder + per-patch adapters + shared
// resampler + optional width projector + causal LM.
class VlmModel {
  public:
    static VlmModel init(const ModelConfig& cfg, std::uint64_t seed);

    // Resampled segments, locals row-major then global (when enabled).
    std::vector<Tensor> forward_visual(const ImageTensor& img) const;

    Tensor sample_loss(const ImageTensor& img, const RenderedInstruction& rendered) const;

    std::string generate(const ImageTensor& img, const std::string& prompt,
                         std::size_t max_new) const;

    // One AdamW step over the trainable parameters at lr_at_step(sched, step).
    // `step` must equal the number of completed optimizer steps.
    double train_step(std::span<const TrainExample> batch, AdamW& optimizer,
                      const LrSchedule& sched, long step);

    void apply_trainability();
    std::vector<Tensor> trainable_parameters() const;
    NamedTensors named_parameters() const;
    void save(const std::filesystem::path& path) const;
    void load(const std::filesystem::path& path);

    const ModelConfig& config() const { return cfg_; }
    Encoder& encoder() { return encoder_; }
    const Encoder& encoder() const { return encoder_; }
    AdapterBank& bank() { return bank_; }
    const AdapterBank& bank() const { return bank_; }
    Resampler& resampler() { return resampler_; }
    const Resampler& resampler() const { return resampler_; }
    MultimodalLm& lm() { return lm_; }
    const MultimodalLm& lm() const { return lm_; }
    Tensor projector() const { return projector_w_; }

  private:
    ModelConfig cfg_;
    Encoder encoder_;
    AdapterBank bank_;
    Resampler resampler_;
    Tensor projector_w_;  // defined only when encoder and lm widths differ
    MultimodalLm lm_;

    const Adapter* adapter_for_local(std::size_t row, std::size_t col) const;
    const Adapter* adapter_for_global() const;
    Tensor project(const Tensor& segment) const;
};

}  // namespace patchlm
