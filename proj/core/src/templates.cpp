// SPDX-License-Identifier: Apache-2.0
#include "patchlm/templates.hpp"

#include "patchlm/errors.hpp"

namespace patchlm {

std::string to_string(TaskKind task) {
    switch (task) {
        case TaskKind::caption: return "caption";
        case TaskKind::detailed_caption: return "detailed_caption";
        case TaskKind::vqa: return "vqa";
    }
    throw UsageError("unknown task kind");
}

TaskKind task_from_string(const std::string& name) {
    if (name == "caption") return TaskKind::caption;
    if (name == "detailed_caption") return TaskKind::detailed_caption;
    if (name == "vqa") return TaskKind::vqa;
    throw UsageError("unknown task name: " + name);
}

RenderedInstruction format_instruction(const InstructionSample& sample) {
    RenderedInstruction out;
    switch (sample.task) {
        case TaskKind::caption:
            out.prompt = kCaptionPrompt;
            break;
        case TaskKind::detailed_caption:
            out.prompt = kDetailedCaptionPrompt;
            break;
        case TaskKind::vqa:
            if (sample.question.empty())
                throw UsageError("vqa sample is missing its question");
            out.prompt = sample.question + " Answer:";
            break;
    }
    out.target = " " + sample.answer;
    return out;
}

std::pair<std::string, std::string> parse_vqa(const std::string& rendered) {
    static const std::string kSep = " Answer: ";
    const auto pos = rendered.find(kSep);
    if (pos == std::string::npos)
        throw UsageError("not a rendered vqa instruction: " + rendered);
    return {rendered.substr(0, pos), rendered.substr(pos + kSep.size())};
}

}  // namespace patchlm
