// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patchlm/image.hpp"
#include "patchlm/rng.hpp"
#include "patchlm/templates.hpp"

namespace patchlm {

// Fixed 5x7 bitmap font: 'A'..'P' plus a solid block '#'. Ground truth for
// the synthetic corpus is exact by construction.
inline constexpr std::size_t kGlyphCount = 17;
inline constexpr std::size_t kGlyphFontWidth = 5;
inline constexpr std::size_t kGlyphFontHeight = 7;

char glyph_char(std::size_t glyph_id);
std::size_t glyph_id_from_char(char c);
// Row bitmasks, bit 4 = leftmost column.
const std::array<std::uint8_t, kGlyphFontHeight>& glyph_bitmap(std::size_t glyph_id);

// Ink palette (quantization corners, white excluded): black, red, green,
// blue, yellow, magenta, cyan.
inline constexpr std::size_t kInkColorCount = 7;
void ink_color(std::size_t color_id, double& r, double& g, double& b);
std::string ink_color_name(std::size_t color_id);

struct GlyphSceneSpec {
    std::size_t canvas_h = 128;
    std::size_t canvas_w = 128;
    std::size_t grid_rows = 8;
    std::size_t grid_cols = 8;
    std::size_t glyph_scale = 2;
    std::size_t n_colors = kInkColorCount;

    void validate() const;
    std::size_t cell_h() const { return grid_rows ? canvas_h / grid_rows : 0; }
    std::size_t cell_w() const { return grid_cols ? canvas_w / grid_cols : 0; }
};

struct GlyphCell {
    std::size_t glyph = 0;
    std::size_t color = 0;
};

struct GlyphScene {
    GlyphSceneSpec spec;
    std::vector<GlyphCell> cells;  // row-major, grid_rows * grid_cols

    const GlyphCell& cell(std::size_t r, std::size_t c) const {
        return cells[r * spec.grid_cols + c];
    }
};

GlyphScene random_scene(const GlyphSceneSpec& spec, Rng& rng);
ImageTensor render_scene(const GlyphScene& scene);

// Row-major glyph listing, rows separated by spaces; "empty" for a blank grid.
std::string scene_caption(const GlyphScene& scene);
// "What is the glyph at row r, col c?" with 1-based coordinates.
InstructionSample scene_vqa(const GlyphScene& scene, std::size_t row, std::size_t col);

struct SynthExample {
    GlyphScene scene;
    InstructionSample sample;
};

// Seeded corpus: VQA questions over uniformly random cells, with an optional
// caption fraction mixed in.
std::vector<SynthExample> synth_examples(const GlyphSceneSpec& spec, std::size_t n,
                                         std::uint64_t seed, double caption_fraction = 0.0);

// On-disk corpus: images/NNNN.ppm plus records.jsonl in the dataset format.
struct SynthDatasetPaths {
    std::filesystem::path records;
    std::filesystem::path image_dir;
};
SynthDatasetPaths write_synth_dataset(const std::filesystem::path& out_dir,
                                      const GlyphSceneSpec& spec, std::size_t n,
                                      std::uint64_t seed, double caption_fraction = 0.0);

}  // namespace patchlm
