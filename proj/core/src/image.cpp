// SPDX-License-Identifier: Apache-2.0
#include "patchlm/image.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "patchlm/errors.hpp"

namespace patchlm {

static_assert(std::endian::native == std::endian::little,
              "raw tensor i/o assumes a little-endian host");

void ImageTensor::clamp01() {
    for (double& p : pixels) p = std::clamp(p, 0.0, 1.0);
}

ImageTensor resize_bilinear(const ImageTensor& img, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0)
        throw DimensionError("resize_bilinear: output extents must be positive");
    if (img.height == 0 || img.width == 0)
        throw DimensionError("resize_bilinear: empty input image");
    if (out_h == img.height && out_w == img.width) return img;

    ImageTensor out(out_h, out_w);
    const double sy = out_h > 1 ? static_cast<double>(img.height - 1) / static_cast<double>(out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(img.width - 1) / static_cast<double>(out_w - 1) : 0.0;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double fy = static_cast<double>(oy) * sy;
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double fx = static_cast<double>(ox) * sx;
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
                const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
                out.at(oy, ox, c) = std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0);
            }
        }
    }
    return out;
}

namespace {

// Skips PPM whitespace and '#' comments between header tokens.
std::size_t next_header_value(std::istream& in, const std::filesystem::path& path) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw IoError("malformed ppm header: " + path.string());
    std::size_t value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + static_cast<std::size_t>(c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

ImageTensor read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw IoError("not a P6 pixmap: " + path.string());
    const std::size_t w = next_header_value(in, path);
    const std::size_t h = next_header_value(in, path);
    const std::size_t maxval = next_header_value(in, path);
    if (maxval != 255) throw IoError("unsupported maxval " + std::to_string(maxval));
    // Header value parsing consumed the single whitespace after maxval.
    ImageTensor img(h, w);
    std::vector<unsigned char> raw(h * w * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError("truncated pixel data: " + path.string());
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
    return img;
}

void write_ppm(const std::filesystem::path& path, const ImageTensor& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(img.pixels[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("short write: " + path.string());
}

ImageTensor read_raw_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<std::uint64_t, 3> extents{};
    in.read(reinterpret_cast<char*>(extents.data()), sizeof(extents));
    if (!in) throw IoError("truncated raw tensor header: " + path.string());
    if (extents[2] != ImageTensor::kChannels)
        throw IoError("raw tensor channel extent must be 3, got " + std::to_string(extents[2]));
    ImageTensor img(static_cast<std::size_t>(extents[0]), static_cast<std::size_t>(extents[1]));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size() * sizeof(double)))
        throw IoError("truncated raw tensor payload: " + path.string());
    img.clamp01();
    return img;
}

void write_raw_tensor(const std::filesystem::path& path, const ImageTensor& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const std::array<std::uint64_t, 3> extents{img.height, img.width, ImageTensor::kChannels};
    out.write(reinterpret_cast<const char*>(extents.data()), sizeof(extents));
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size() * sizeof(double)));
    if (!out) throw IoError("short write: " + path.string());
}

}  // namespace patchlm
