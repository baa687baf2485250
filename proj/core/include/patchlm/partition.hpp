// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "patchlm/image.hpp"

namespace patchlm {

// Native input resolution of the shared encoder. Reference value 448 x 448;
// desk-scale runs use 64 x 64.
struct Window {
    std::size_t height = 448;
    std::size_t width = 448;
};

struct LocalCrop {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t y_offset = 0;
    std::size_t x_offset = 0;
    ImageTensor crop;
};

// Row-major local crops plus the resized whole image. The adapter index of
// the crop at (row, col) is row * cols + col.
struct PatchGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<LocalCrop> locals;
    ImageTensor global;
};

inline constexpr std::size_t kMaxLocalPatches = 6;

// Ceil-division window counts per axis. Requires the image to cover the window.
std::pair<std::size_t, std::size_t> grid_dims(std::size_t height, std::size_t width,
                                              const Window& win);

// n window offsets along one axis: first at 0, last at extent - win_extent,
// intermediates evenly spaced (rounded), strictly increasing. Windows overlap
// exactly when win_extent does not divide extent.
std::vector<std::size_t> placements(std::size_t extent, std::size_t win_extent, std::size_t n);

// Sliding-window split plus global resize. Undersized inputs are bilinearly
// upscaled to the window first. Exceeding `max_local_patches` raises
// CapacityError; the override exists for experimentation only.
PatchGrid partition(const ImageTensor& img, const Window& win,
                    std::size_t max_local_patches = kMaxLocalPatches);

}  // namespace patchlm
