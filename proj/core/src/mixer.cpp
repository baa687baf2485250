// SPDX-License-Identifier: Apache-2.0
#include "patchlm/mixer.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "patchlm/dataset.hpp"
#include "patchlm/errors.hpp"
#include "patchlm/rng.hpp"

namespace patchlm {

std::string to_string(TaskGroup group) {
    switch (group) {
        case TaskGroup::image_caption: return "image_caption";
        case TaskGroup::general_vqa: return "general_vqa";
        case TaskGroup::scene_text_vqa: return "scene_text_vqa";
        case TaskGroup::doc_vqa: return "doc_vqa";
    }
    throw UsageError("unknown task group");
}

TaskGroup task_group_from_string(const std::string& name) {
    if (name == "image_caption") return TaskGroup::image_caption;
    if (name == "general_vqa") return TaskGroup::general_vqa;
    if (name == "scene_text_vqa") return TaskGroup::scene_text_vqa;
    if (name == "doc_vqa") return TaskGroup::doc_vqa;
    throw UsageError("unknown task group: " + name);
}

void MixturePlan::validate() const {
    if (!(scale > 0.0) || scale > 1.0)
        throw UsageError("mixture plan: scale must lie in (0, 1]");
    for (const TaskSpec& spec : specs) {
        if (spec.reference_count <= 0)
            throw UsageError("mixture plan: dataset " + spec.dataset +
                             " has a non-positive reference count");
        if (spec.dataset.empty()) throw UsageError("mixture plan: unnamed dataset");
    }
}

MixturePlan reference_mixture_plan() {
    using G = TaskGroup;
    using K = TaskKind;
    MixturePlan plan;
    plan.specs = {
        {G::image_caption, "detailed_caption", 213000, "", K::detailed_caption},
        {G::image_caption, "coco_caption", 82000, "", K::caption},
        {G::image_caption, "textcaps", 109000, "", K::caption},
        {G::general_vqa, "vqav2", 100000, "", K::vqa},
        {G::general_vqa, "okvqa", 18000, "", K::vqa},
        {G::general_vqa, "gqa", 150000, "", K::vqa},
        {G::general_vqa, "scienceqa", 18000, "", K::vqa},
        {G::general_vqa, "vizwiz", 20000, "", K::vqa},
        {G::scene_text_vqa, "textvqa", 34000, "", K::vqa},
        {G::scene_text_vqa, "ocrvqa", 250000, "", K::vqa},
        {G::scene_text_vqa, "ai2d", 24000, "", K::vqa},
        {G::doc_vqa, "docvqa", 118000, "", K::vqa},
        {G::doc_vqa, "chartqa", 84000, "", K::vqa},
        {G::doc_vqa, "infovqa", 47000, "", K::vqa},
        {G::doc_vqa, "deepform", 7000, "", K::vqa},
        {G::doc_vqa, "klc", 27000, "", K::vqa},
        {G::doc_vqa, "wtq", 28000, "", K::vqa},
        {G::doc_vqa, "tabfact", 91000, "", K::vqa},
        {G::doc_vqa, "visualmrc", 21000, "", K::vqa},
    };
    return plan;
}

std::vector<std::pair<std::string, long>> plan_counts(const MixturePlan& plan) {
    plan.validate();
    std::vector<std::pair<std::string, long>> out;
    out.reserve(plan.specs.size());
    for (const TaskSpec& spec : plan.specs) {
        const long target = std::max(
            1L, std::lround(static_cast<double>(spec.reference_count) * plan.scale));
        out.emplace_back(spec.dataset, target);
    }
    return out;
}

long plan_total(const MixturePlan& plan) {
    long total = 0;
    for (const auto& [name, count] : plan_counts(plan)) total += count;
    return total;
}

MixResult sample_mixture(const MixturePlan& plan,
                         const std::map<std::string, std::vector<InstructionSample>>& corpora) {
    plan.validate();
    MixResult result;
    const auto counts = plan_counts(plan);
    for (std::size_t si = 0; si < plan.specs.size(); ++si) {
        const TaskSpec& spec = plan.specs[si];
        const long target = counts[si].second;
        const auto it = corpora.find(spec.dataset);
        if (it == corpora.end() || it->second.empty())
            throw UsageError("mixture: corpus missing for dataset " + spec.dataset);
        const std::vector<InstructionSample>& corpus = it->second;

        Rng rng(Rng::derive(plan.seed, "mix/" + spec.dataset));
        std::vector<std::size_t> picks;
        if (static_cast<std::size_t>(target) <= corpus.size()) {
            picks = rng.sample_without_replacement(corpus.size(), static_cast<std::size_t>(target));
        } else {
            result.warnings.push_back("dataset " + spec.dataset + " has " +
                                      std::to_string(corpus.size()) + " records, sampling " +
                                      std::to_string(target) + " with replacement");
            picks.reserve(static_cast<std::size_t>(target));
            for (long i = 0; i < target; ++i)
                picks.push_back(static_cast<std::size_t>(rng.below(corpus.size())));
        }
        for (std::size_t idx : picks) {
            MixedRecord rec;
            rec.dataset = spec.dataset;
            rec.sample = corpus[idx];
            rec.sample.task = spec.template_kind;
            rec.rendered = format_instruction(rec.sample);
            result.records.push_back(std::move(rec));
        }
    }
    Rng shuffle_rng(Rng::derive(plan.seed, "mix/shuffle"));
    shuffle_rng.shuffle(result.records);
    return result;
}

std::string mixed_record_to_json_line(const MixedRecord& record) {
    nlohmann::ordered_json j;
    j["image"] = record.sample.image;
    j["task"] = to_string(record.sample.task);
    if (record.sample.task == TaskKind::vqa) j["question"] = record.sample.question;
    j["answer"] = record.sample.answer;
    j["dataset"] = record.dataset;
    j["prompt"] = record.rendered.prompt;
    j["target"] = record.rendered.target;
    return j.dump();
}

MixResult sample_mixture_to_file(const MixturePlan& plan, const std::filesystem::path& out_path) {
    std::map<std::string, std::vector<InstructionSample>> corpora;
    for (const TaskSpec& spec : plan.specs) {
        if (spec.source_path.empty())
            throw UsageError("mixture: dataset " + spec.dataset + " has no source path");
        corpora[spec.dataset] = read_instruction_jsonl(spec.source_path);
    }
    MixResult result = sample_mixture(plan, corpora);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path.string());
    for (const MixedRecord& rec : result.records) out << mixed_record_to_json_line(rec) << "\n";
    if (!out) throw IoError("short write: " + out_path.string());
    return result;
}

MixturePlan mixture_plan_from_config(const KeyValueConfig& cfg) {
    MixturePlan plan;
    plan.scale = cfg.get_double("scale", 1.0);
    plan.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    // dataset.<name>.count declares a dataset; other dataset.<name>.* keys
    // refine it.
    std::vector<std::string> order;
    for (const auto& [key, value] : cfg.with_prefix("dataset.")) {
        const auto dot = key.find('.');
        if (dot == std::string::npos)
            throw UsageError("mixture plan: malformed dataset key: dataset." + key);
        const std::string name = key.substr(0, dot);
        if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    }
    for (const std::string& name : order) {
        TaskSpec spec;
        spec.dataset = name;
        const std::string prefix = "dataset." + name + ".";
        spec.reference_count = cfg.get_int(prefix + "count", 0);
        spec.group = task_group_from_string(cfg.get_string(prefix + "group", "image_caption"));
        spec.template_kind = task_from_string(cfg.get_string(prefix + "template", "caption"));
        spec.source_path = cfg.get_string(prefix + "path", "");
        plan.specs.push_back(std::move(spec));
    }
    plan.validate();
    return plan;
}

MixturePlan load_mixture_plan(const std::filesystem::path& path) {
    return mixture_plan_from_config(KeyValueConfig::parse_file(path));
}

}  // namespace patchlm
