// SPDX-License-Identifier: Apache-2.0
#include "patchlm/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "patchlm/errors.hpp"

namespace patchlm {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("config line " + std::to_string(lineno) + " has no '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw IoError("config line " + std::to_string(lineno) + " has an empty key");
        cfg.set(std::move(key), std::move(value));
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& kv) { return kv.first == key; });
}

void KeyValueConfig::set(const std::string& key, std::string value) {
    for (auto& kv : entries_) {
        if (kv.first == key) {
            kv.second = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    for (const auto& kv : entries_)
        if (kv.first == key) return kv.second;
    throw UsageError("missing config key: " + key);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    return std::stol(get_string(key));
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return std::stod(get_string(key));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("config key " + key + " is not a boolean: " + v);
}

std::vector<std::pair<std::string, std::string>> KeyValueConfig::with_prefix(
    const std::string& prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& kv : entries_)
        if (kv.first.starts_with(prefix))
            out.emplace_back(kv.first.substr(prefix.size()), kv.second);
    return out;
}

}  // namespace patchlm
