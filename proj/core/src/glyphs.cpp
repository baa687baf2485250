// SPDX-License-Identifier: Apache-2.0
#include "patchlm/glyphs.hpp"

#include <array>
#include <fstream>

#include "patchlm/dataset.hpp"
#include "patchlm/errors.hpp"

namespace patchlm {

namespace {

constexpr char kGlyphChars[kGlyphCount + 1] = "ABCDEFGHIJKLMNOP#";

// clang-format off
constexpr std::array<std::array<std::uint8_t, kGlyphFontHeight>, kGlyphCount> kFont{{
    {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001},  // A
    {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110},  // B
    {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110},  // C
    {0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100},  // D
    {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111},  // E
    {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000},  // F
    {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01110},  // G
    {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001},  // H
    {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},  // I
    {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100},  // J
    {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001},  // K
    {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111},  // L
    {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001},  // M
    {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001},  // N
    {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110},  // O
    {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000},  // P
    {0b11111, 0b11111, 0b11111, 0b11111, 0b11111, 0b11111, 0b11111},  // # (block)
}};

constexpr std::array<std::array<double, 3>, kInkColorCount> kInkPalette{{
    {0.0, 0.0, 0.0},  // black
    {1.0, 0.0, 0.0},  // red
    {0.0, 1.0, 0.0},  // green
    {0.0, 0.0, 1.0},  // blue
    {1.0, 1.0, 0.0},  // yellow
    {1.0, 0.0, 1.0},  // magenta
    {0.0, 1.0, 1.0},  // cyan
}};

constexpr std::array<const char*, kInkColorCount> kInkNames{
    "black", "red", "green", "blue", "yellow", "magenta", "cyan"};
// clang-format on

}  // namespace

char glyph_char(std::size_t glyph_id) {
    if (glyph_id >= kGlyphCount) throw IndexError("glyph id out of range");
    return kGlyphChars[glyph_id];
}

std::size_t glyph_id_from_char(char c) {
    for (std::size_t i = 0; i < kGlyphCount; ++i)
        if (kGlyphChars[i] == c) return i;
    throw IndexError(std::string("unknown glyph char: ") + c);
}

const std::array<std::uint8_t, kGlyphFontHeight>& glyph_bitmap(std::size_t glyph_id) {
    if (glyph_id >= kGlyphCount) throw IndexError("glyph id out of range");
    return kFont[glyph_id];
}

void ink_color(std::size_t color_id, double& r, double& g, double& b) {
    if (color_id >= kInkColorCount) throw IndexError("ink color id out of range");
    r = kInkPalette[color_id][0];
    g = kInkPalette[color_id][1];
    b = kInkPalette[color_id][2];
}

std::string ink_color_name(std::size_t color_id) {
    if (color_id >= kInkColorCount) throw IndexError("ink color id out of range");
    return kInkNames[color_id];
}

void GlyphSceneSpec::validate() const {
    if (canvas_h == 0 || canvas_w == 0)
        throw DimensionError("glyph scene: canvas extents must be positive");
    if (grid_rows == 0 || grid_cols == 0) return;  // blank scene
    if (glyph_scale == 0) throw DimensionError("glyph scene: glyph_scale must be positive");
    if (n_colors == 0 || n_colors > kInkColorCount)
        throw DimensionError("glyph scene: n_colors out of range");
    if (canvas_h % grid_rows != 0 || canvas_w % grid_cols != 0)
        throw DimensionError("glyph scene: canvas not divisible by grid");
    if (kGlyphFontHeight * glyph_scale > cell_h() || kGlyphFontWidth * glyph_scale > cell_w())
        throw DimensionError("glyph scene: scaled glyph does not fit its cell");
}

GlyphScene random_scene(const GlyphSceneSpec& spec, Rng& rng) {
    spec.validate();
    GlyphScene scene;
    scene.spec = spec;
    scene.cells.resize(spec.grid_rows * spec.grid_cols);
    for (auto& cell : scene.cells) {
        cell.glyph = static_cast<std::size_t>(rng.below(kGlyphCount));
        cell.color = static_cast<std::size_t>(rng.below(spec.n_colors));
    }
    return scene;
}

ImageTensor render_scene(const GlyphScene& scene) {
    const GlyphSceneSpec& spec = scene.spec;
    spec.validate();
    ImageTensor img(spec.canvas_h, spec.canvas_w, 1.0);  // white background
    if (scene.cells.empty()) return img;

    const std::size_t s = spec.glyph_scale;
    const std::size_t gw = kGlyphFontWidth * s;
    const std::size_t gh = kGlyphFontHeight * s;
    for (std::size_t r = 0; r < spec.grid_rows; ++r) {
        for (std::size_t c = 0; c < spec.grid_cols; ++c) {
            const GlyphCell& cell = scene.cell(r, c);
            const auto& bitmap = glyph_bitmap(cell.glyph);
            double cr, cg, cb;
            ink_color(cell.color, cr, cg, cb);
            // Centered in the cell; margins keep neighboring glyphs disjoint.
            const std::size_t y0 = r * spec.cell_h() + (spec.cell_h() - gh) / 2;
            const std::size_t x0 = c * spec.cell_w() + (spec.cell_w() - gw) / 2;
            for (std::size_t gy = 0; gy < kGlyphFontHeight; ++gy) {
                for (std::size_t gx = 0; gx < kGlyphFontWidth; ++gx) {
                    if (!(bitmap[gy] >> (kGlyphFontWidth - 1 - gx) & 1)) continue;
                    for (std::size_t dy = 0; dy < s; ++dy) {
                        for (std::size_t dx = 0; dx < s; ++dx) {
                            const std::size_t y = y0 + gy * s + dy;
                            const std::size_t x = x0 + gx * s + dx;
                            img.at(y, x, 0) = cr;
                            img.at(y, x, 1) = cg;
                            img.at(y, x, 2) = cb;
                        }
                    }
                }
            }
        }
    }
    return img;
}

std::string scene_caption(const GlyphScene& scene) {
    if (scene.cells.empty()) return "empty";
    std::string out;
    for (std::size_t r = 0; r < scene.spec.grid_rows; ++r) {
        if (r) out.push_back(' ');
        for (std::size_t c = 0; c < scene.spec.grid_cols; ++c)
            out.push_back(glyph_char(scene.cell(r, c).glyph));
    }
    return out;
}

InstructionSample scene_vqa(const GlyphScene& scene, std::size_t row, std::size_t col) {
    if (row >= scene.spec.grid_rows || col >= scene.spec.grid_cols)
        throw IndexError("scene_vqa: cell out of range");
    InstructionSample s;
    s.task = TaskKind::vqa;
    s.question = "What is the glyph at row " + std::to_string(row + 1) + ", col " +
                 std::to_string(col + 1) + "?";
    s.answer = std::string(1, glyph_char(scene.cell(row, col).glyph));
    return s;
}

std::vector<SynthExample> synth_examples(const GlyphSceneSpec& spec, std::size_t n,
                                         std::uint64_t seed, double caption_fraction) {
    Rng rng(Rng::derive(seed, "synth"));
    std::vector<SynthExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SynthExample ex;
        ex.scene = random_scene(spec, rng);
        const bool caption = rng.uniform() < caption_fraction;
        if (caption || ex.scene.cells.empty()) {
            ex.sample.task = TaskKind::caption;
            ex.sample.answer = scene_caption(ex.scene);
        } else {
            const std::size_t r = static_cast<std::size_t>(rng.below(spec.grid_rows));
            const std::size_t c = static_cast<std::size_t>(rng.below(spec.grid_cols));
            ex.sample = scene_vqa(ex.scene, r, c);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

SynthDatasetPaths write_synth_dataset(const std::filesystem::path& out_dir,
                                      const GlyphSceneSpec& spec, std::size_t n,
                                      std::uint64_t seed, double caption_fraction) {
    SynthDatasetPaths paths;
    paths.image_dir = out_dir / "images";
    paths.records = out_dir / "records.jsonl";
    std::filesystem::create_directories(paths.image_dir);

    std::vector<SynthExample> examples = synth_examples(spec, n, seed, caption_fraction);
    std::vector<InstructionSample> records;
    records.reserve(examples.size());
    char name[32];
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.ppm", i);
        const std::filesystem::path img_path = paths.image_dir / name;
        write_ppm(img_path, render_scene(examples[i].scene));
        examples[i].sample.image = img_path.string();
        records.push_back(examples[i].sample);
    }
    write_instruction_jsonl(paths.records, records);
    return paths;
}

}  // namespace patchlm
