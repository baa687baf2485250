// SPDX-License-Identifier: Apache-2.0
#include "patchlm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "patchlm/errors.hpp"

namespace patchlm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'P', 'L', 'M', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t count = entries.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [name, tensor] : entries) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        out.write(name.data(), name_len);
        const std::uint32_t rank = static_cast<std::uint32_t>(tensor.shape().size());
        out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
        for (std::size_t e : tensor.shape()) {
            const std::uint64_t extent = e;
            out.write(reinterpret_cast<const char*>(&extent), sizeof(extent));
        }
        out.write(reinterpret_cast<const char*>(tensor.data()),
                  static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write: " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kMagic))
        throw IoError("not a checkpoint file: " + path.string());
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    NamedTensors entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
        Shape shape(rank);
        for (auto& e : shape) {
            std::uint64_t extent = 0;
            in.read(reinterpret_cast<char*>(&extent), sizeof(extent));
            e = static_cast<std::size_t>(extent);
        }
        if (!in) throw IoError("truncated checkpoint entry header: " + path.string());
        std::vector<double> data(shape_numel(shape));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)))
            throw IoError("truncated checkpoint payload: " + path.string());
        entries.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
    }
    return entries;
}

NamedTensors filter_namespace(const NamedTensors& entries, const std::string& prefix) {
    NamedTensors out;
    for (const auto& [name, tensor] : entries)
        if (name.starts_with(prefix)) out.emplace_back(name.substr(prefix.size()), tensor);
    return out;
}

}  // namespace patchlm
