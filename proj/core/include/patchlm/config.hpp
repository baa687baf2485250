// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace patchlm {

// Flat "key = value" text config; '#' starts a comment, insertion order is
// preserved. Shared by run configs and mixture plans.
class KeyValueConfig {
  public:
    KeyValueConfig() = default;
    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    void set(const std::string& key, std::string value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    // Keys beginning with `prefix`, in file order, prefix stripped.
    std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace patchlm
