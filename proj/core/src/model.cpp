// SPDX-License-Identifier: Apache-2.0
#include "patchlm/model.hpp"

#include <algorithm>

#include "patchlm/errors.hpp"

namespace patchlm {

std::string to_string(AdapterMode mode) {
    switch (mode) {
        case AdapterMode::none: return "none";
        case AdapterMode::shared_one: return "shared_one";
        case AdapterMode::per_patch: return "per_patch";
    }
    throw UsageError("unknown adapter mode");
}

AdapterMode adapter_mode_from_string(const std::string& name) {
    if (name == "none") return AdapterMode::none;
    if (name == "shared_one") return AdapterMode::shared_one;
    if (name == "per_patch") return AdapterMode::per_patch;
    throw UsageError("unknown adapter mode: " + name);
}

std::string to_string(InputMode mode) {
    return mode == InputMode::patch ? "patch" : "interpolate";
}

InputMode input_mode_from_string(const std::string& name) {
    if (name == "patch") return InputMode::patch;
    if (name == "interpolate") return InputMode::interpolate;
    throw UsageError("unknown input mode: " + name);
}

void ModelConfig::validate() const {
    encoder.validate();
    resampler.validate();
    lm.validate();
    if (resampler.d_model != encoder.d_model)
        throw DimensionError("model config: resampler width must match encoder width");
    if (input_mode == InputMode::interpolate && adapter_mode == AdapterMode::per_patch)
        throw UsageError("model config: the interpolation baseline has no patch grid; "
                         "use adapter mode none or shared_one");
    if (input_mode == InputMode::patch) local_grid();  // throws if > cap
}

std::pair<std::size_t, std::size_t> ModelConfig::local_grid() const {
    const auto [rows, cols] =
        grid_dims(std::max(resolution_h, encoder.window.height),
                  std::max(resolution_w, encoder.window.width), encoder.window);
    if (rows * cols > max_local_patches)
        throw CapacityError("model config: resolution " + std::to_string(resolution_h) + "x" +
                            std::to_string(resolution_w) + " yields " +
                            std::to_string(rows * cols) + " local patches, above the cap of " +
                            std::to_string(max_local_patches));
    return {rows, cols};
}

std::size_t ModelConfig::n_local_patches() const {
    const auto [rows, cols] = local_grid();
    return rows * cols;
}

std::size_t ModelConfig::n_adapters() const {
    switch (adapter_mode) {
        case AdapterMode::none: return 0;
        case AdapterMode::shared_one: return 1;
        case AdapterMode::per_patch:
            return n_local_patches() + (include_global && adapt_global ? 1 : 0);
    }
    throw UsageError("unknown adapter mode");
}

VlmModel VlmModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    VlmModel m;
    m.cfg_ = cfg;
    {
        Rng rng(Rng::derive(seed, "encoder"));
        m.encoder_ = Encoder::init(cfg.encoder, rng);
    }
    if (cfg.input_mode == InputMode::interpolate) {
        // The whole image becomes one encoder input; stretch the positional
        // table to its token grid once, up front.
        if (cfg.resolution_h % cfg.encoder.patch_embed_size != 0 ||
            cfg.resolution_w % cfg.encoder.patch_embed_size != 0)
            throw DimensionError("interpolation baseline: resolution must be divisible by "
                                 "patch_embed_size");
        m.encoder_.interpolate_pos_embed(cfg.resolution_h / cfg.encoder.patch_embed_size,
                                         cfg.resolution_w / cfg.encoder.patch_embed_size);
    }
    {
        Rng rng(Rng::derive(seed, "adapters"));
        m.bank_ = make_adapter_bank(cfg.encoder, cfg.n_adapters(), rng);
    }
    {
        Rng rng(Rng::derive(seed, "resampler"));
        m.resampler_ = Resampler::init(cfg.resampler, rng);
    }
    if (cfg.encoder.d_model != cfg.lm.d_model) {
        Rng rng(Rng::derive(seed, "projector"));
        m.projector_w_ = Tensor::randn({cfg.encoder.d_model, cfg.lm.d_model}, rng, 0.02, true);
    }
    {
        Rng rng(Rng::derive(seed, "lm"));
        m.lm_ = MultimodalLm::init(cfg.lm, rng);
    }
    m.apply_trainability();
    return m;
}

const Adapter* VlmModel::adapter_for_local(std::size_t row, std::size_t col) const {
    switch (cfg_.adapter_mode) {
        case AdapterMode::none: return nullptr;
        case AdapterMode::shared_one: return &bank_.at(0);
        case AdapterMode::per_patch: {
            const auto [rows, cols] = cfg_.local_grid();
            (void)rows;
            return &bank_.at(row * cols + col);
        }
    }
    return nullptr;
}

const Adapter* VlmModel::adapter_for_global() const {
    if (!cfg_.adapt_global) return nullptr;
    if (cfg_.adapter_mode == AdapterMode::shared_one) return &bank_.at(0);
    if (cfg_.adapter_mode == AdapterMode::per_patch) return &bank_.at(cfg_.n_local_patches());
    return nullptr;
}

Tensor VlmModel::project(const Tensor& segment) const {
    if (!projector_w_.defined()) return segment;
    return matmul(segment, projector_w_);
}

std::vector<Tensor> VlmModel::forward_visual(const ImageTensor& img) const {
    std::vector<Tensor> segments;
    if (cfg_.input_mode == InputMode::interpolate) {
        ImageTensor sized = resize_bilinear(img, cfg_.resolution_h, cfg_.resolution_w);
        const Adapter* adapter =
            cfg_.adapter_mode == AdapterMode::none ? nullptr : &bank_.at(0);
        PatchFeatures feats = encoder_.encode(sized, adapter, CropSource{true, 0, 0});
        segments.push_back(project(resampler_.resample(feats)));
        return segments;
    }

    PatchGrid grid = partition(img, cfg_.encoder.window, cfg_.max_local_patches);
    std::vector<PatchFeatures> local_feats;
    local_feats.reserve(grid.locals.size());
    for (const LocalCrop& lc : grid.locals)
        local_feats.push_back(encoder_.encode(lc.crop, adapter_for_local(lc.row, lc.col),
                                              CropSource{false, lc.row, lc.col}));
    PatchFeatures global_feats;
    const PatchFeatures* global_ptr = nullptr;
    if (cfg_.include_global) {
        global_feats = encoder_.encode(grid.global, adapter_for_global(), CropSource{true, 0, 0});
        global_ptr = &global_feats;
    }
    for (Tensor& seg : resampler_.resample_all(local_feats, global_ptr))
        segments.push_back(project(seg));
    return segments;
}

Tensor VlmModel::sample_loss(const ImageTensor& img, const RenderedInstruction& rendered) const {
    std::vector<Tensor> segments = forward_visual(img);
    std::vector<int> prompt_ids = ByteTokenizer::encode(rendered.prompt);
    std::vector<int> target_ids = ByteTokenizer::encode(rendered.target);
    target_ids.push_back(ByteTokenizer::kEndOfText);
    Tensor assembled = lm_.assemble(segments, prompt_ids);
    return lm_.lm_loss(assembled, target_ids);
}

std::string VlmModel::generate(const ImageTensor& img, const std::string& prompt,
                               std::size_t max_new) const {
    NoGradGuard no_grad;
    std::vector<Tensor> segments = forward_visual(img);
    std::vector<int> prompt_ids = ByteTokenizer::encode(prompt);
    return lm_.decode_greedy(segments, prompt_ids, max_new);
}

double VlmModel::train_step(std::span<const TrainExample> batch, AdamW& optimizer,
                            const LrSchedule& sched, long step) {
    if (batch.empty()) throw UsageError("train_step: empty batch");
    if (step != optimizer.step_count())
        throw UsageError("train_step: step " + std::to_string(step) +
                         " does not match optimizer state t " +
                         std::to_string(optimizer.step_count()));
    std::vector<Tensor> losses;
    losses.reserve(batch.size());
    for (const TrainExample& ex : batch)
        losses.push_back(sample_loss(ex.image, format_instruction(ex.sample)));
    Tensor total = losses.front();
    for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
    Tensor loss = scale(total, 1.0 / static_cast<double>(batch.size()));
    optimizer.zero_grad();
    loss.backward();
    optimizer.step(lr_at_step(sched, step));
    return loss.item();
}

void VlmModel::apply_trainability() {
    set_trainability(encoder_, bank_, cfg_.policy);
    resampler_.set_requires_grad(true);
    lm_.set_requires_grad(true);
    if (projector_w_.defined()) projector_w_.set_requires_grad(true);
}

std::vector<Tensor> VlmModel::trainable_parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters())
        if (t.requires_grad()) out.push_back(t);
    return out;
}

NamedTensors VlmModel::named_parameters() const {
    NamedTensors out = encoder_.named_parameters();
    for (auto& e : bank_.named_parameters()) out.push_back(std::move(e));
    for (auto& e : resampler_.named_parameters()) out.push_back(std::move(e));
    if (projector_w_.defined()) out.emplace_back("projector/w", projector_w_);
    for (auto& e : lm_.named_parameters()) out.push_back(std::move(e));
    return out;
}

void VlmModel::save(const std::filesystem::path& path) const {
    save_checkpoint(path, named_parameters());
}

void VlmModel::load(const std::filesystem::path& path) {
    NamedTensors stored = load_checkpoint(path);
    NamedTensors own = named_parameters();
    if (stored.size() != own.size())
        throw IoError("checkpoint entry count mismatch: file has " +
                      std::to_string(stored.size()) + ", model has " +
                      std::to_string(own.size()));
    for (std::size_t i = 0; i < own.size(); ++i) {
        auto& [name, tensor] = own[i];
        const auto& [stored_name, stored_tensor] = stored[i];
        if (name != stored_name)
            throw IoError("checkpoint name mismatch at entry " + std::to_string(i) + ": " +
                          stored_name + " vs " + name);
        if (tensor.shape() != stored_tensor.shape())
            throw DimensionError("checkpoint shape mismatch for " + name);
        std::copy(stored_tensor.values().begin(), stored_tensor.values().end(),
                  tensor.values().begin());
    }
}

}  // namespace patchlm
