// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace patchlm {

// Dense H x W x 3 pixel array, values clamped to [0, 1], row-major (y, x, c).
struct ImageTensor {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    static constexpr std::size_t kChannels = 3;

    ImageTensor() = default;
    ImageTensor(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), pixels(h * w * kChannels, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * kChannels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * kChannels + c];
    }

    void clamp01();
    bool operator==(const ImageTensor&) const = default;
};

// Corner-aligned bilinear resampling; output stays in [0, 1].
ImageTensor resize_bilinear(const ImageTensor& img, std::size_t out_h, std::size_t out_w);

// Binary portable pixmap (P6, maxval 255). Pixel value = byte / 255.
ImageTensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageTensor& img);

// Raw tensor container shared across modules: header of three little-endian
// u64 extents (height, width, channels) followed by little-endian f64 values.
ImageTensor read_raw_tensor(const std::filesystem::path& path);
void write_raw_tensor(const std::filesystem::path& path, const ImageTensor& img);

}  // namespace patchlm
