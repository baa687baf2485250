// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

namespace patchlm {

// Byte-level vocabulary: ids 0..255 are raw bytes, 256 is end-of-text.
// Templates stay byte-exact by construction.
class ByteTokenizer {
  public:
    static constexpr int kEndOfText = 256;
    static constexpr std::size_t kVocabSize = 257;

    static std::vector<int> encode(const std::string& text);
    // Decodes up to (not including) the first end-of-text id.
    static std::string decode(std::span<const int> ids);
};

}  // namespace patchlm
