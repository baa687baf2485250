// SPDX-License-Identifier: Apache-2.0
#include "patchlm/stubs.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <vector>

#include "patchlm/glyphs.hpp"

namespace patchlm {

namespace {

// Quantization corners: the 7 ink colors of the glyph palette plus white.
constexpr std::array<std::array<double, 3>, 8> kCorners{{
    {0.0, 0.0, 0.0},  // black
    {1.0, 0.0, 0.0},  // red
    {0.0, 1.0, 0.0},  // green
    {0.0, 0.0, 1.0},  // blue
    {1.0, 1.0, 0.0},  // yellow
    {1.0, 0.0, 1.0},  // magenta
    {0.0, 1.0, 1.0},  // cyan
    {1.0, 1.0, 1.0},  // white
}};

constexpr std::array<const char*, 8> kCornerNames{
    "black", "red", "green", "blue", "yellow", "magenta", "cyan", "white"};

constexpr int kWhite = 7;

}  // namespace

int quantize_color(double r, double g, double b) {
    int best = 0;
    double best_d = 1e30;
    for (int i = 0; i < static_cast<int>(kCorners.size()); ++i) {
        const double dr = r - kCorners[i][0];
        const double dg = g - kCorners[i][1];
        const double db = b - kCorners[i][2];
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::string color_name(int quantized) { return kCornerNames[static_cast<std::size_t>(quantized)]; }

bool is_ink(int quantized) { return quantized != kWhite; }

std::vector<InkComponent> find_ink_components(const ImageTensor& image) {
    const std::size_t h = image.height, w = image.width;
    std::vector<int> quant(h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            quant[y * w + x] = quantize_color(image.at(y, x, 0), image.at(y, x, 1),
                                              image.at(y, x, 2));

    std::vector<InkComponent> components;
    std::vector<bool> seen(h * w, false);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (seen[start] || !is_ink(quant[start])) continue;
        // 8-connected flood fill; glyph strokes may touch only diagonally.
        InkComponent comp;
        std::array<std::size_t, 8> color_hist{};
        std::size_t min_x = w, max_x = 0, min_y = h, max_y = 0;
        stack.clear();
        stack.push_back(start);
        seen[start] = true;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            const std::size_t y = idx / w, x = idx % w;
            ++comp.pixel_count;
            ++color_hist[static_cast<std::size_t>(quant[idx])];
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const long ny = static_cast<long>(y) + dy;
                    const long nx = static_cast<long>(x) + dx;
                    if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) ||
                        nx >= static_cast<long>(w))
                        continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w +
                                             static_cast<std::size_t>(nx);
                    if (seen[nidx] || !is_ink(quant[nidx])) continue;
                    seen[nidx] = true;
                    stack.push_back(nidx);
                }
            }
        }
        comp.box = Box{static_cast<long>(min_x), static_cast<long>(min_y),
                       static_cast<long>(max_x - min_x + 1),
                       static_cast<long>(max_y - min_y + 1)};
        comp.dominant_color = static_cast<int>(
            std::max_element(color_hist.begin(), color_hist.end()) - color_hist.begin());
        components.push_back(comp);
    }
    // Reading order keeps downstream output stable.
    std::stable_sort(components.begin(), components.end(),
                     [](const InkComponent& a, const InkComponent& b) {
                         return std::tie(a.box.y, a.box.x) < std::tie(b.box.y, b.box.x);
                     });
    return components;
}

std::string stub_global_caption(const ImageTensor& image) {
    std::size_t ink_pixels = 0;
    std::array<std::size_t, 8> hist{};
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            const int q = quantize_color(image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2));
            if (is_ink(q)) {
                ++ink_pixels;
                ++hist[static_cast<std::size_t>(q)];
            }
        }
    }
    if (ink_pixels == 0) return "a blank scene";
    const double density = static_cast<double>(ink_pixels) /
                           static_cast<double>(image.height * image.width);
    const char* amount = density < 0.02 ? "sparse" : density < 0.10 ? "scattered" : "dense";
    const int dominant = static_cast<int>(std::max_element(hist.begin(), hist.end()) -
                                          hist.begin());
    return std::string("a ") + amount + " arrangement of " + color_name(dominant) +
           " marks on a white background";
}

std::vector<std::pair<Box, std::string>> stub_region_descriptions(const ImageTensor& image) {
    std::vector<std::pair<Box, std::string>> out;
    for (const InkComponent& comp : find_ink_components(image))
        out.emplace_back(comp.box, "a " + color_name(comp.dominant_color) + " mark");
    return out;
}

namespace {

// Exact template match of one component against the scaled glyph font. The
// component box is the tight ink bounding box, so the glyph's blank border
// columns are excluded; match against per-glyph tight patterns.
bool match_glyph(const ImageTensor& image, const InkComponent& comp, char& out_char) {
    for (std::size_t gid = 0; gid < kGlyphCount; ++gid) {
        const auto& bitmap = glyph_bitmap(gid);
        // Tight horizontal extent of this glyph.
        std::size_t first_col = kGlyphFontWidth, last_col = 0;
        for (std::size_t y = 0; y < kGlyphFontHeight; ++y) {
            for (std::size_t x = 0; x < kGlyphFontWidth; ++x) {
                if (bitmap[y] >> (kGlyphFontWidth - 1 - x) & 1) {
                    first_col = std::min(first_col, x);
                    last_col = std::max(last_col, x);
                }
            }
        }
        const std::size_t tight_w = last_col - first_col + 1;
        if (comp.box.h % kGlyphFontHeight != 0) continue;
        const std::size_t s = static_cast<std::size_t>(comp.box.h) / kGlyphFontHeight;
        if (s == 0 || static_cast<std::size_t>(comp.box.w) != tight_w * s) continue;
        bool ok = true;
        for (std::size_t y = 0; ok && y < static_cast<std::size_t>(comp.box.h); ++y) {
            for (std::size_t x = 0; ok && x < static_cast<std::size_t>(comp.box.w); ++x) {
                const std::size_t gy = y / s;
                const std::size_t gx = first_col + x / s;
                const bool expected = bitmap[gy] >> (kGlyphFontWidth - 1 - gx) & 1;
                const std::size_t iy = static_cast<std::size_t>(comp.box.y) + y;
                const std::size_t ix = static_cast<std::size_t>(comp.box.x) + x;
                const int q = quantize_color(image.at(iy, ix, 0), image.at(iy, ix, 1),
                                             image.at(iy, ix, 2));
                if (is_ink(q) != expected) ok = false;
            }
        }
        if (ok) {
            out_char = glyph_char(gid);
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<OcrLine> stub_ocr_lines(const ImageTensor& image) {
    std::vector<OcrLine> out;
    for (const InkComponent& comp : find_ink_components(image)) {
        char c;
        if (match_glyph(image, comp, c)) out.push_back(OcrLine{std::string(1, c), comp.box});
    }
    return out;
}

std::vector<std::pair<Box, double>> stub_segments(const ImageTensor& image) {
    std::vector<std::pair<Box, double>> out;
    for (const InkComponent& comp : find_ink_components(image)) {
        // Fill ratio as the self-estimated mask quality: solid blocks score
        // 1.0, stroke glyphs land well below typical keep thresholds.
        const double area = static_cast<double>(comp.box.w) * static_cast<double>(comp.box.h);
        out.emplace_back(comp.box, static_cast<double>(comp.pixel_count) / area);
    }
    return out;
}

std::string stub_object_description(const ImageTensor& image, const Box& box) {
    std::array<std::size_t, 8> hist{};
    std::size_t ink = 0;
    for (long y = box.y; y < box.y + box.h; ++y) {
        for (long x = box.x; x < box.x + box.w; ++x) {
            if (y < 0 || x < 0 || y >= static_cast<long>(image.height) ||
                x >= static_cast<long>(image.width))
                continue;
            const std::size_t uy = static_cast<std::size_t>(y);
            const std::size_t ux = static_cast<std::size_t>(x);
            const int q = quantize_color(image.at(uy, ux, 0), image.at(uy, ux, 1),
                                         image.at(uy, ux, 2));
            if (is_ink(q)) {
                ++ink;
                ++hist[static_cast<std::size_t>(q)];
            }
        }
    }
    if (ink == 0) return "an empty area";
    const int dominant = static_cast<int>(std::max_element(hist.begin(), hist.end()) -
                                          hist.begin());
    const long area = box.w * box.h;
    const char* size_word = area < 64 ? "small" : area < 400 ? "medium" : "large";
    return std::string("a ") + size_word + " " + color_name(dominant) + " object";
}

double stub_match_score(const ImageTensor& image, const Box& box,
                        const std::string& description) {
    int claimed = -1;
    for (int i = 0; i < 8; ++i) {
        if (description.find(kCornerNames[static_cast<std::size_t>(i)]) != std::string::npos) {
            claimed = i;
            break;
        }
    }
    if (claimed < 0) return 0.5;  // no checkable color claim
    std::size_t ink = 0, matching = 0;
    for (long y = box.y; y < box.y + box.h; ++y) {
        for (long x = box.x; x < box.x + box.w; ++x) {
            if (y < 0 || x < 0 || y >= static_cast<long>(image.height) ||
                x >= static_cast<long>(image.width))
                continue;
            const std::size_t uy = static_cast<std::size_t>(y);
            const std::size_t ux = static_cast<std::size_t>(x);
            const int q = quantize_color(image.at(uy, ux, 0), image.at(uy, ux, 1),
                                         image.at(uy, ux, 2));
            if (!is_ink(q)) continue;
            ++ink;
            if (q == claimed) ++matching;
        }
    }
    if (ink == 0) return 0.0;
    return static_cast<double>(matching) / static_cast<double>(ink);
}

std::string stub_summary(const std::string& prompt) {
    // Pure function of the prompt text: lift the global caption and report
    // the evidence counts.
    std::istringstream in(prompt);
    std::string line;
    std::string global_caption;
    std::size_t regions = 0, text_lines = 0;
    int section = 0;  // 0 header, 1 regions, 2 text
    while (std::getline(in, line)) {
        if (line.starts_with("Global caption: "))
            global_caption = line.substr(std::string("Global caption: ").size());
        else if (line == "Regions:")
            section = 1;
        else if (line == "Text lines:")
            section = 2;
        else if (line.starts_with("[") && section == 1)
            ++regions;
        else if (line.starts_with("[") && section == 2)
            ++text_lines;
    }
    std::ostringstream out;
    out << global_caption << ", with " << regions << " described regions and " << text_lines
        << " recognized text marks";
    return out.str();
}

AnnotatorPorts default_stub_ports() {
    AnnotatorPorts ports;
    ports.global_captioner = stub_global_caption;
    ports.region_describer = stub_region_descriptions;
    ports.ocr_reader = stub_ocr_lines;
    ports.segmenter = stub_segments;
    ports.object_describer = stub_object_description;
    ports.matcher = stub_match_score;
    ports.summarizer = stub_summary;
    return ports;
}

}  // namespace patchlm
