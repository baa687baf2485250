// SPDX-License-Identifier: Apache-2.0
#include "patchlm/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "patchlm/errors.hpp"

namespace patchlm {

namespace {

using Clock = std::chrono::steady_clock;

// Held-out scenes are arm-independent so every configuration answers the
// same questions.
constexpr std::uint64_t kEvalSeed = 0x9e1cb3u;

}  // namespace

double measure_throughput(const RunConfig& cfg, std::size_t n_images, std::size_t warmup) {
    if (n_images < 10) throw UsageError("measure_throughput: need at least 10 images");
    VlmModel model = VlmModel::init(cfg.model, cfg.seed);
    const std::vector<SynthExample> examples =
        synth_examples(cfg.scene, n_images + warmup, Rng::derive(cfg.seed, "throughput"));
    NoGradGuard no_grad;
    Clock::time_point start{};
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i == warmup) start = Clock::now();
        const ImageTensor img = render_scene(examples[i].scene);
        (void)model.forward_visual(img);
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return static_cast<double>(n_images) / seconds;
}

VlmModel train_run(const RunConfig& cfg, std::uint64_t seed, std::size_t n_train,
                   const std::function<void(long, double)>& on_step) {
    VlmModel model = VlmModel::init(cfg.model, seed);
    const std::vector<SynthExample> pool =
        synth_examples(cfg.scene, n_train, Rng::derive(seed, "train-pool"));

    AdamW optimizer(model.trainable_parameters(), cfg.train.beta1, cfg.train.beta2,
                    cfg.train.eps, cfg.train.weight_decay);
    const LrSchedule sched = cfg.train.schedule();
    Rng batch_rng(Rng::derive(seed, "batches"));
    for (long step = 0; step < cfg.train.total_steps; ++step) {
        std::vector<TrainExample> batch;
        batch.reserve(cfg.train.batch_size);
        for (std::size_t b = 0; b < cfg.train.batch_size; ++b) {
            const SynthExample& ex = pool[batch_rng.below(pool.size())];
            batch.push_back(TrainExample{render_scene(ex.scene), ex.sample});
        }
        const double loss = model.train_step(batch, optimizer, sched, step);
        if (on_step) on_step(step, loss);
    }
    return model;
}

double evaluate_exact_match(const VlmModel& model, std::span<const SynthExample> examples,
                            std::size_t max_new) {
    if (examples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const SynthExample& ex : examples) {
        const RenderedInstruction rendered = format_instruction(ex.sample);
        const ImageTensor img = render_scene(ex.scene);
        const std::string decoded = model.generate(img, rendered.prompt, max_new);
        if (decoded == rendered.target) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

AblationReport run_ablation(std::span<const RunConfig> sweep, const AblationOptions& options) {
    AblationReport report;
    for (const RunConfig& cfg : sweep) {
        AblationRow row;
        row.name = cfg.name;
        try {
            const ParamBreakdown params = count_params(cfg.model);
            row.params_total = params.total();
            row.params_adapters = params.adapters;
            row.flops = count_flops(cfg);
            if (options.measure_rate)
                row.throughput = measure_throughput(cfg, options.throughput_images);

            const std::vector<SynthExample> eval_set =
                synth_examples(cfg.scene, options.n_eval, kEvalSeed);
            for (std::uint64_t seed : options.seeds) {
                if (options.log)
                    options.log("arm " + cfg.name + " seed " + std::to_string(seed));
                VlmModel model = train_run(cfg, seed, options.n_train);
                row.accuracy_per_seed.push_back(
                    evaluate_exact_match(model, eval_set, options.max_new));
            }
            for (double a : row.accuracy_per_seed) row.accuracy_mean += a;
            if (!row.accuracy_per_seed.empty())
                row.accuracy_mean /= static_cast<double>(row.accuracy_per_seed.size());
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string AblationReport::table() const {
    std::ostringstream out;
    out << std::left << std::setw(26) << "run" << std::right << std::setw(12) << "params"
        << std::setw(12) << "adapters" << std::setw(14) << "flops" << std::setw(12) << "imgs/s"
        << std::setw(10) << "acc" << "  per-seed\n";
    for (const AblationRow& row : rows) {
        out << std::left << std::setw(26) << row.name;
        if (!row.ok) {
            out << "  FAILED: " << row.error << "\n";
            continue;
        }
        out << std::right << std::setw(12) << row.params_total << std::setw(12)
            << row.params_adapters << std::setw(14) << std::scientific << std::setprecision(3)
            << row.flops << std::defaultfloat << std::setw(12) << std::fixed
            << std::setprecision(2) << row.throughput << std::setw(9) << std::setprecision(1)
            << row.accuracy_mean * 100.0 << "%" << std::defaultfloat << "  [";
        for (std::size_t i = 0; i < row.accuracy_per_seed.size(); ++i) {
            if (i) out << " ";
            out << std::fixed << std::setprecision(1) << row.accuracy_per_seed[i] * 100.0;
        }
        out << std::defaultfloat << "]\n";
    }
    return out.str();
}

std::string AblationReport::jsonl() const {
    std::ostringstream out;
    for (const AblationRow& row : rows) {
        nlohmann::ordered_json j;
        j["run"] = row.name;
        j["ok"] = row.ok;
        if (!row.ok) j["error"] = row.error;
        j["params_total"] = row.params_total;
        j["params_adapters"] = row.params_adapters;
        j["flops"] = row.flops;
        j["throughput"] = row.throughput;
        j["accuracy_per_seed"] = row.accuracy_per_seed;
        j["accuracy_mean"] = row.accuracy_mean;
        out << j.dump() << "\n";
    }
    return out.str();
}

RunConfig desk_run_config() {
    RunConfig cfg;
    cfg.name = "desk";
    cfg.model.resolution_h = 128;
    cfg.model.resolution_w = 128;
    cfg.model.encoder = EncoderConfig{};  // window 64, patch 16, depth 2, width 32
    cfg.model.resampler = ResamplerConfig{};
    cfg.model.lm = LmConfig{};
    cfg.model.lm.max_seq = 160;
    cfg.model.adapter_mode = AdapterMode::per_patch;
    cfg.model.include_global = true;
    cfg.scene = GlyphSceneSpec{};
    return cfg;
}

std::vector<RunConfig> default_ablation_sweep(const RunConfig& base) {
    std::vector<RunConfig> sweep;

    RunConfig patched = base;
    patched.name = "patched-2x2+global";
    patched.model.input_mode = InputMode::patch;
    patched.model.adapter_mode = AdapterMode::per_patch;
    patched.model.include_global = true;
    patched.model.policy = TrainabilityPolicy{};  // frozen base + adapters
    sweep.push_back(patched);

    RunConfig no_global = patched;
    no_global.name = "patched-2x2-noglobal";
    no_global.model.include_global = false;
    sweep.push_back(no_global);

    // Baselines follow the traditional recipe: no adapters, full finetune.
    RunConfig global_only = base;
    global_only.name = "global-only";
    global_only.model.input_mode = InputMode::interpolate;
    global_only.model.resolution_h = base.model.encoder.window.height;
    global_only.model.resolution_w = base.model.encoder.window.width;
    global_only.model.adapter_mode = AdapterMode::none;
    global_only.model.policy = TrainabilityPolicy{false, false};
    sweep.push_back(global_only);

    RunConfig interp = base;
    interp.name = "interp-full-res";
    interp.model.input_mode = InputMode::interpolate;
    interp.model.adapter_mode = AdapterMode::none;
    interp.model.policy = TrainabilityPolicy{false, false};
    sweep.push_back(interp);

    return sweep;
}

}  // namespace patchlm
