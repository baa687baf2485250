// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>

namespace patchlm {

enum class TaskKind { caption, detailed_caption, vqa };

std::string to_string(TaskKind task);
TaskKind task_from_string(const std::string& name);

struct InstructionSample {
    TaskKind task = TaskKind::caption;
    std::string image;     // path or synthetic id
    std::string question;  // vqa only
    std::string answer;
};

// Byte-exact prompt plus the answer continuation the model is trained on.
// prompt + target reproduces the uniform task templates:
//   "Generate the caption in English:"
//   "Generate the detailed caption in English:"
//   "{question} Answer: {answer}"
struct RenderedInstruction {
    std::string prompt;
    std::string target;

    std::string full() const { return prompt + target; }
};

RenderedInstruction format_instruction(const InstructionSample& sample);

// Recovers (question, answer) from a rendered vqa string; splits on the
// first " Answer: ".
std::pair<std::string, std::string> parse_vqa(const std::string& rendered);

inline constexpr const char* kCaptionPrompt = "Generate the caption in English:";
inline constexpr const char* kDetailedCaptionPrompt = "Generate the detailed caption in English:";

}  // namespace patchlm
