// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchlm/templates.hpp"

namespace patchlm {

// Line-delimited JSON, one instruction record per line:
//   {"image": path, "task": string, "question"?: string, "answer": string}
// Extra fields are preserved by writers that add them and ignored by readers.
std::vector<InstructionSample> read_instruction_jsonl(const std::filesystem::path& path);
void write_instruction_jsonl(const std::filesystem::path& path,
                             const std::vector<InstructionSample>& samples);

std::string instruction_to_json_line(const InstructionSample& sample);
InstructionSample instruction_from_json_line(const std::string& line);

}  // namespace patchlm
