// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "patchlm/tensor.hpp"

namespace patchlm {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Named-tensor container. Per entry: u32 name length, name bytes, u32 rank,
// u64 extents, f64 payload; all little-endian. Names carry namespaces
// ("encoder/...", "adapter/3/...", "resampler/...") so adapter weights can
// ship separately from the base.
void save_checkpoint(const std::filesystem::path& path, const NamedTensors& entries);
NamedTensors load_checkpoint(const std::filesystem::path& path);

// Entries whose name starts with `prefix`, prefix stripped.
NamedTensors filter_namespace(const NamedTensors& entries, const std::string& prefix);

}  // namespace patchlm
