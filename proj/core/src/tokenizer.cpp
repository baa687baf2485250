// SPDX-License-Identifier: Apache-2.0
#include "patchlm/tokenizer.hpp"

namespace patchlm {

std::vector<int> ByteTokenizer::encode(const std::string& text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(static_cast<int>(c));
    return ids;
}

std::string ByteTokenizer::decode(std::span<const int> ids) {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id == kEndOfText) break;
        out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
    }
    return out;
}

}  // namespace patchlm
