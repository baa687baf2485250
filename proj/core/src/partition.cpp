// SPDX-License-Identifier: Apache-2.0
#include "patchlm/partition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchlm/errors.hpp"

namespace patchlm {

std::pair<std::size_t, std::size_t> grid_dims(std::size_t height, std::size_t width,
                                              const Window& win) {
    if (win.height == 0 || win.width == 0)
        throw DimensionError("grid_dims: window extents must be positive");
    if (height < win.height || width < win.width)
        throw DimensionError("grid_dims: image " + std::to_string(height) + "x" +
                             std::to_string(width) + " smaller than window " +
                             std::to_string(win.height) + "x" + std::to_string(win.width) +
                             "; upscale first");
    const std::size_t rows = (height + win.height - 1) / win.height;
    const std::size_t cols = (width + win.width - 1) / win.width;
    return {rows, cols};
}

std::vector<std::size_t> placements(std::size_t extent, std::size_t win_extent, std::size_t n) {
    if (n == 0 || extent < win_extent)
        throw DimensionError("placements: need n >= 1 and extent >= window");
    if (n == 1) return {0};
    const std::size_t span = extent - win_extent;
    std::vector<std::size_t> offsets(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) * static_cast<double>(span) /
                         static_cast<double>(n - 1);
        offsets[i] = static_cast<std::size_t>(std::llround(f));
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (offsets[i] <= offsets[i - 1])
            throw DimensionError("placements: offsets not strictly increasing (extent " +
                                 std::to_string(extent) + ", window " +
                                 std::to_string(win_extent) + ", n " + std::to_string(n) + ")");
    }
    return offsets;
}

PatchGrid partition(const ImageTensor& img, const Window& win, std::size_t max_local_patches) {
    if (img.height == 0 || img.width == 0) throw DimensionError("partition: empty image");

    // Undersized axes are upscaled to the window extent; never padded.
    const ImageTensor* src = &img;
    ImageTensor upscaled;
    if (img.height < win.height || img.width < win.width) {
        upscaled = resize_bilinear(img, std::max(img.height, win.height),
                                   std::max(img.width, win.width));
        src = &upscaled;
    }

    const auto [rows, cols] = grid_dims(src->height, src->width, win);
    if (rows * cols > max_local_patches)
        throw CapacityError("partition: " + std::to_string(rows * cols) +
                            " local patches exceed the maximum of " +
                            std::to_string(max_local_patches) +
                            " imposed by the language model input length");

    const std::vector<std::size_t> y_offsets = placements(src->height, win.height, rows);
    const std::vector<std::size_t> x_offsets = placements(src->width, win.width, cols);

    PatchGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.locals.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            LocalCrop lc;
            lc.row = r;
            lc.col = c;
            lc.y_offset = y_offsets[r];
            lc.x_offset = x_offsets[c];
            lc.crop = ImageTensor(win.height, win.width);
            for (std::size_t y = 0; y < win.height; ++y)
                for (std::size_t x = 0; x < win.width; ++x)
                    for (std::size_t ch = 0; ch < ImageTensor::kChannels; ++ch)
                        lc.crop.at(y, x, ch) =
                            src->at(lc.y_offset + y, lc.x_offset + x, ch);
            grid.locals.push_back(std::move(lc));
        }
    }
    grid.global = resize_bilinear(img, win.height, win.width);
    return grid;
}

}  // namespace patchlm
