// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "patchlm/captions.hpp"
#include "patchlm/image.hpp"

namespace patchlm {

// Rule-based, deterministic annotator implementations over the synthetic
// glyph corpus. Signatures match the roles of the real systems so genuine
// clients can replace them; none of them performs model inference.

// Nearest-corner color quantization used by all stubs.
int quantize_color(double r, double g, double b);
std::string color_name(int quantized);
bool is_ink(int quantized);  // anything but white

struct InkComponent {
    Box box;
    std::size_t pixel_count = 0;
    int dominant_color = 0;
};

// 8-connected components of non-background pixels, scan order.
std::vector<InkComponent> find_ink_components(const ImageTensor& image);

std::string stub_global_caption(const ImageTensor& image);
std::vector<std::pair<Box, std::string>> stub_region_descriptions(const ImageTensor& image);
std::vector<OcrLine> stub_ocr_lines(const ImageTensor& image);
std::vector<std::pair<Box, double>> stub_segments(const ImageTensor& image);
std::string stub_object_description(const ImageTensor& image, const Box& box);
double stub_match_score(const ImageTensor& image, const Box& box, const std::string& description);
std::string stub_summary(const std::string& prompt);

AnnotatorPorts default_stub_ports();

}  // namespace patchlm
