// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "patchlm/flops.hpp"
#include "patchlm/model.hpp"

namespace patchlm {

// Forward-only wall-clock rate over seeded synthetic images; the first
// `warmup` images are timed out of the measurement. Noisy by nature.
double measure_throughput(const RunConfig& cfg, std::size_t n_images, std::size_t warmup = 3);

// Builds the model for one arm, trains it for cfg.train.total_steps steps on
// a seeded synthetic corpus, and returns it. The per-step callback (when set)
// receives (step, loss).
VlmModel train_run(const RunConfig& cfg, std::uint64_t seed, std::size_t n_train,
                   const std::function<void(long, double)>& on_step = nullptr);

// Greedy-decode exact match over held-out examples; an answer counts only if
// the decoded continuation equals the rendered target byte-for-byte.
double evaluate_exact_match(const VlmModel& model, std::span<const SynthExample> examples,
                            std::size_t max_new = 8);

struct AblationRow {
    std::string name;
    bool ok = true;
    std::string error;
    std::size_t params_total = 0;
    std::size_t params_adapters = 0;
    double flops = 0.0;
    double throughput = 0.0;
    std::vector<double> accuracy_per_seed;
    double accuracy_mean = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows;

    std::string table() const;
    std::string jsonl() const;
};

struct AblationOptions {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t n_train = 256;
    std::size_t n_eval = 128;
    std::size_t throughput_images = 10;
    std::size_t max_new = 8;
    bool measure_rate = true;
    std::function<void(const std::string&)> log = nullptr;
};

// Trains and evaluates every configuration; a failing arm is recorded and the
// sweep continues. An empty sweep yields an empty report.
AblationReport run_ablation(std::span<const RunConfig> sweep, const AblationOptions& options);

// The desk-scale analog of the published resolution/adapter sweep: patched
// 2x2 grid with and without global, global-only, and the positional
// interpolation baseline at equal pixel budget.
std::vector<RunConfig> default_ablation_sweep(const RunConfig& base);

// Desk-scale defaults shared by the CLI and the acceptance run.
RunConfig desk_run_config();

}  // namespace patchlm
