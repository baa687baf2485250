// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: training, evaluation, the ablation harness, the
// caption pipeline, data mixing, synthetic data generation and the analytic
// cost counters.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "patchlm/bench.hpp"
#include "patchlm/captions.hpp"
#include "patchlm/config.hpp"
#include "patchlm/dataset.hpp"
#include "patchlm/mixer.hpp"
#include "patchlm/stubs.hpp"

namespace {

using namespace patchlm;

// Every key is optional; reference values from the full-scale recipe are
// noted in configs/reference.cfg.
RunConfig run_config_from_file(const std::string& path, std::uint64_t seed) {
    RunConfig cfg = desk_run_config();
    cfg.seed = seed;
    if (path.empty()) return cfg;
    const KeyValueConfig kv = KeyValueConfig::parse_file(path);

    cfg.name = kv.get_string("name", cfg.name);
    cfg.model.resolution_h = kv.get_int("resolution_h", cfg.model.resolution_h);
    cfg.model.resolution_w = kv.get_int("resolution_w", cfg.model.resolution_w);
    auto& enc = cfg.model.encoder;
    enc.window.height = kv.get_int("window_h", enc.window.height);
    enc.window.width = kv.get_int("window_w", enc.window.width);
    enc.patch_embed_size = kv.get_int("patch_embed_size", enc.patch_embed_size);
    enc.depth = kv.get_int("encoder_depth", enc.depth);
    enc.d_model = kv.get_int("encoder_d_model", enc.d_model);
    enc.n_heads = kv.get_int("encoder_n_heads", enc.n_heads);
    enc.d_mlp = kv.get_int("encoder_d_mlp", enc.d_mlp);
    enc.attn_rank = kv.get_int("attn_rank", enc.attn_rank);
    enc.mlp_rank = kv.get_int("mlp_rank", enc.mlp_rank);
    enc.lora_alpha = kv.get_double("lora_alpha", enc.lora_alpha);
    auto& res = cfg.model.resampler;
    res.n_queries = kv.get_int("n_queries", res.n_queries);
    res.d_model = enc.d_model;
    res.n_heads = kv.get_int("resampler_n_heads", res.n_heads);
    res.depth = kv.get_int("resampler_depth", res.depth);
    auto& lm = cfg.model.lm;
    lm.depth = kv.get_int("lm_depth", lm.depth);
    lm.d_model = kv.get_int("lm_d_model", lm.d_model);
    lm.n_heads = kv.get_int("lm_n_heads", lm.n_heads);
    lm.d_mlp = kv.get_int("lm_d_mlp", lm.d_mlp);
    lm.max_seq = kv.get_int("lm_max_seq", lm.max_seq);
    lm.use_separator = kv.get_bool("lm_use_separator", lm.use_separator);
    cfg.model.adapter_mode =
        adapter_mode_from_string(kv.get_string("adapter_mode", to_string(cfg.model.adapter_mode)));
    cfg.model.input_mode =
        input_mode_from_string(kv.get_string("input_mode", to_string(cfg.model.input_mode)));
    cfg.model.include_global = kv.get_bool("include_global", cfg.model.include_global);
    cfg.model.adapt_global = kv.get_bool("adapt_global", cfg.model.adapt_global);
    cfg.model.policy.base_frozen = kv.get_bool("base_frozen", cfg.model.policy.base_frozen);
    cfg.model.policy.adapters_trainable =
        kv.get_bool("adapters_trainable", cfg.model.policy.adapters_trainable);
    auto& train = cfg.train;
    train.lr = kv.get_double("lr", train.lr);
    train.min_lr = kv.get_double("min_lr", train.min_lr);
    train.weight_decay = kv.get_double("weight_decay", train.weight_decay);
    train.beta1 = kv.get_double("beta1", train.beta1);
    train.beta2 = kv.get_double("beta2", train.beta2);
    train.warmup_steps = kv.get_int("warmup_steps", train.warmup_steps);
    train.total_steps = kv.get_int("total_steps", train.total_steps);
    train.batch_size = kv.get_int("batch_size", train.batch_size);
    auto& scene = cfg.scene;
    scene.canvas_h = kv.get_int("scene_canvas_h", scene.canvas_h);
    scene.canvas_w = kv.get_int("scene_canvas_w", scene.canvas_w);
    scene.grid_rows = kv.get_int("scene_grid_rows", scene.grid_rows);
    scene.grid_cols = kv.get_int("scene_grid_cols", scene.grid_cols);
    scene.glyph_scale = kv.get_int("scene_glyph_scale", scene.glyph_scale);
    scene.n_colors = kv.get_int("scene_n_colors", scene.n_colors);
    cfg.flops_prompt_len = kv.get_int("flops_prompt_len", cfg.flops_prompt_len);
    cfg.seed = kv.get_int("seed", cfg.seed);
    if (seed != 0) cfg.seed = seed;
    return cfg;
}

int cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::size_t n_train) {
    std::filesystem::create_directories(out_dir);
    std::cout << "training " << cfg.name << " for " << cfg.train.total_steps << " steps\n";
    VlmModel model = train_run(cfg, cfg.seed, n_train, [](long step, double loss) {
        if (step % 25 == 0) std::cout << "step " << step << " loss " << loss << "\n";
    });
    const auto ckpt = out_dir / "model.ckpt";
    model.save(ckpt);
    std::cout << "saved " << ckpt.string() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, std::size_t n_eval) {
    VlmModel model = VlmModel::init(cfg.model, cfg.seed);
    if (!checkpoint.empty()) model.load(checkpoint);
    const std::vector<SynthExample> eval_set =
        synth_examples(cfg.scene, n_eval, Rng::derive(cfg.seed, "cli-eval"));
    const double acc = evaluate_exact_match(model, eval_set);
    std::cout << "exact match: " << acc * 100.0 << "% over " << n_eval << " samples\n";
    return 0;
}

int cmd_ablate(const RunConfig& base, const std::filesystem::path& out_dir,
               const AblationOptions& options) {
    std::filesystem::create_directories(out_dir);
    const std::vector<RunConfig> sweep = default_ablation_sweep(base);
    const AblationReport report = run_ablation(sweep, options);
    std::cout << report.table();
    std::ofstream jsonl(out_dir / "ablation.jsonl");
    jsonl << report.jsonl();
    std::ofstream table(out_dir / "ablation.txt");
    table << report.table();
    std::cout << "report written to " << (out_dir / "ablation.jsonl").string() << "\n";
    return 0;
}

int cmd_gen_captions(const std::string& input, const std::filesystem::path& out_dir,
                     double itm_threshold, double seg_threshold) {
    std::filesystem::create_directories(out_dir);
    AnnotatorPorts ports = default_stub_ports();
    PipelineParams params{itm_threshold, seg_threshold};
    const CaptionRunStats stats = generate_descriptions(
        input, out_dir / "captions.jsonl", out_dir / "captions.ledger",
        out_dir / "captions.failures.jsonl", ports, params,
        [](const ImageRecord& rec) { return read_ppm(rec.image_path); });
    std::cout << "processed " << stats.processed << ", skipped " << stats.skipped << ", failed "
              << stats.failed << "\n";
    return 0;
}

int cmd_mix_data(const std::string& plan_path, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const MixturePlan plan = load_mixture_plan(plan_path);
    const MixResult result = sample_mixture_to_file(plan, out_dir / "mixture.jsonl");
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << result.records.size() << " records -> "
              << (out_dir / "mixture.jsonl").string() << "\n";
    return 0;
}

int cmd_synth_data(const RunConfig& cfg, const std::filesystem::path& out_dir, std::size_t n,
                   double caption_fraction) {
    const SynthDatasetPaths paths =
        write_synth_dataset(out_dir, cfg.scene, n, cfg.seed, caption_fraction);
    std::cout << n << " scenes -> " << paths.records.string() << "\n";
    return 0;
}

int cmd_count_params(const RunConfig& cfg) {
    const ParamBreakdown p = count_params(cfg.model);
    std::cout << "encoder_base " << p.encoder_base << "\n"
              << "adapters     " << p.adapters << "\n"
              << "resampler    " << p.resampler << "\n"
              << "projector    " << p.projector << "\n"
              << "lm           " << p.lm << "\n"
              << "total        " << p.total() << "\n";
    return 0;
}

int cmd_count_flops(const RunConfig& cfg) {
    const FlopsBreakdown f = count_flops_breakdown(cfg.model, cfg.flops_prompt_len);
    std::cout << std::scientific;
    std::cout << "encoder_base " << f.encoder_base << "\n"
              << "lora         " << f.lora << "\n"
              << "resampler    " << f.resampler << "\n"
              << "projector    " << f.projector << "\n"
              << "lm           " << f.lm << "\n"
              << "total        " << f.total() << "\n";
    return 0;
}

int cmd_throughput(const RunConfig& cfg, std::size_t n_images) {
    const double rate = measure_throughput(cfg, n_images);
    std::cout << rate << " images/s over " << n_images << " images\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patchlm: sliding-window high-resolution multimodal model, desk scale"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "flat key=value run config")->capture_default_str();
    app.add_option("--seed", seed, "seed override (0 keeps the config seed)")
        ->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* train = app.add_subcommand("train", "train one configuration on synthetic data");
    std::size_t n_train = 256;
    train->add_option("--train-pool", n_train, "training pool size")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "exact-match evaluation of a checkpoint");
    std::string checkpoint;
    std::size_t n_eval = 128;
    eval->add_option("--checkpoint", checkpoint, "checkpoint file");
    eval->add_option("--n", n_eval, "held-out sample count")->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "resolution/adapter/global sweep");
    AblationOptions ablate_opts;
    std::size_t ablate_seeds = 3;
    ablate->add_option("--seeds", ablate_seeds, "seeds per arm")->capture_default_str();
    ablate->add_option("--train-pool", ablate_opts.n_train)->capture_default_str();
    ablate->add_option("--n-eval", ablate_opts.n_eval)->capture_default_str();

    auto* gen_captions = app.add_subcommand("gen-captions", "multi-level caption pipeline "
                                                            "(deterministic stub annotators)");
    std::string captions_input;
    double itm_threshold = 0.5;
    double seg_threshold = 0.88;
    gen_captions->add_option("--input", captions_input, "image records jsonl")->required();
    gen_captions->add_option("--itm-threshold", itm_threshold)->capture_default_str();
    gen_captions->add_option("--seg-threshold", seg_threshold)->capture_default_str();

    auto* mix = app.add_subcommand("mix-data", "build the multi-task training mixture");
    std::string plan_path;
    mix->add_option("--plan", plan_path, "mixture plan file")->required();

    auto* synth = app.add_subcommand("synth-data", "generate the glyph-grid corpus");
    std::size_t synth_n = 100;
    double caption_fraction = 0.0;
    synth->add_option("--n", synth_n, "record count")->capture_default_str();
    synth->add_option("--caption-fraction", caption_fraction)->capture_default_str();

    app.add_subcommand("count-params", "analytic parameter breakdown");
    app.add_subcommand("count-flops", "analytic forward-pass cost breakdown");

    auto* throughput = app.add_subcommand("throughput", "forward-only images/second");
    std::size_t throughput_n = 20;
    throughput->add_option("--n", throughput_n, "image count (>= 10)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = run_config_from_file(config_path, seed);
        if (train->parsed()) return cmd_train(cfg, out_dir, n_train);
        if (eval->parsed()) return cmd_eval(cfg, checkpoint, n_eval);
        if (ablate->parsed()) {
            ablate_opts.seeds.clear();
            for (std::uint64_t s = 1; s <= ablate_seeds; ++s) ablate_opts.seeds.push_back(s);
            ablate_opts.log = [](const std::string& msg) { std::cout << msg << "\n"; };
            return cmd_ablate(cfg, out_dir, ablate_opts);
        }
        if (gen_captions->parsed())
            return cmd_gen_captions(captions_input, out_dir, itm_threshold, seg_threshold);
        if (mix->parsed()) return cmd_mix_data(plan_path, out_dir);
        if (synth->parsed()) return cmd_synth_data(cfg, out_dir, synth_n, caption_fraction);
        if (app.get_subcommand("count-params")->parsed()) return cmd_count_params(cfg);
        if (app.get_subcommand("count-flops")->parsed()) return cmd_count_flops(cfg);
        if (throughput->parsed()) return cmd_throughput(cfg, throughput_n);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
