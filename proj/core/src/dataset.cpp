// SPDX-License-Identifier: Apache-2.0
#include "patchlm/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "patchlm/errors.hpp"

namespace patchlm {

using nlohmann::json;

std::string instruction_to_json_line(const InstructionSample& sample) {
    json j;
    j["image"] = sample.image;
    j["task"] = to_string(sample.task);
    if (sample.task == TaskKind::vqa) j["question"] = sample.question;
    j["answer"] = sample.answer;
    return j.dump();
}

InstructionSample instruction_from_json_line(const std::string& line) {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        throw IoError("malformed instruction record: " + line);
    InstructionSample s;
    s.task = task_from_string(j.at("task").get<std::string>());
    s.image = j.value("image", "");
    s.question = j.value("question", "");
    s.answer = j.at("answer").get<std::string>();
    return s;
}

std::vector<InstructionSample> read_instruction_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<InstructionSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(instruction_from_json_line(line));
    }
    return out;
}

void write_instruction_jsonl(const std::filesystem::path& path,
                             const std::vector<InstructionSample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& s : samples) out << instruction_to_json_line(s) << "\n";
    if (!out) throw IoError("short write: " + path.string());
}

}  // namespace patchlm
