// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "patchlm/config.hpp"
#include "patchlm/templates.hpp"

namespace patchlm {

enum class TaskGroup { image_caption, general_vqa, scene_text_vqa, doc_vqa };

std::string to_string(TaskGroup group);
TaskGroup task_group_from_string(const std::string& name);

struct TaskSpec {
    TaskGroup group = TaskGroup::image_caption;
    std::string dataset;
    long reference_count = 0;  // full-scale sample count for this dataset
    std::string source_path;
    TaskKind template_kind = TaskKind::caption;
};

struct MixturePlan {
    std::vector<TaskSpec> specs;
    double scale = 1.0;  // rational in (0, 1]
    std::uint64_t seed = 0;

    void validate() const;
};

// The full-scale reference mixture: 19 datasets over four task groups,
// 1,441,000 samples total. Source paths are left empty.
MixturePlan reference_mixture_plan();

// Per-dataset target = round(reference_count * scale), minimum 1; insertion
// order preserved.
std::vector<std::pair<std::string, long>> plan_counts(const MixturePlan& plan);
long plan_total(const MixturePlan& plan);

struct MixedRecord {
    std::string dataset;
    InstructionSample sample;
    RenderedInstruction rendered;
};

// Seeded uniform sampling without replacement per dataset (with replacement
// plus a warning when a corpus is short), rendered through the instruction
// templates and globally shuffled. Byte-reproducible for a fixed seed.
struct MixResult {
    std::vector<MixedRecord> records;
    std::vector<std::string> warnings;
};

MixResult sample_mixture(const MixturePlan& plan,
                         const std::map<std::string, std::vector<InstructionSample>>& corpora);

// File-level wrapper: corpora come from each spec's source_path, output is
// line-delimited JSON in the dataset format plus dataset/prompt/target fields.
MixResult sample_mixture_to_file(const MixturePlan& plan, const std::filesystem::path& out_path);

std::string mixed_record_to_json_line(const MixedRecord& record);

// Plan file: flat key/value lines. `scale` and `seed` are global;
// `dataset.<name>.count/group/template/path` declare one dataset each.
MixturePlan load_mixture_plan(const std::filesystem::path& path);
MixturePlan mixture_plan_from_config(const KeyValueConfig& cfg);

}  // namespace patchlm
