// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "patchlm/image.hpp"

namespace patchlm {

struct Box {
    long x = 0;
    long y = 0;
    long w = 0;
    long h = 0;

    bool operator==(const Box&) const = default;
};

enum class RegionSource { region_describer, segment, ocr };

std::string to_string(RegionSource source);
RegionSource region_source_from_string(const std::string& name);

struct Region {
    Box box;
    std::string description;
    double itm_score = 0.0;
    RegionSource source = RegionSource::region_describer;
};

struct OcrLine {
    std::string text;
    Box box;
};

// Defaults follow the reference pipeline: image-text-matching threshold 0.5,
// segment quality threshold 0.88.
struct PipelineParams {
    double itm_threshold = 0.5;
    double seg_iou_threshold = 0.88;
};

struct ImageRecord {
    std::string id;
    std::string image_path;
    std::string original_caption;
};

// One multi-source evidence bundle for an image. After filtering, every
// region's itm_score is >= the threshold it was filtered at.
struct AnnotationBundle {
    std::string id;
    std::string original_caption;
    std::string global_caption;
    std::vector<Region> regions;
    std::vector<OcrLine> ocr_lines;
    PipelineParams params;
    std::vector<std::string> warnings;
};

// Pluggable annotator back-ends. Each port owns one evidence channel:
// whole-image captioning, region-to-text, OCR, segmentation (boxes with a
// self-estimated quality score), per-segment description, image-text match
// scoring, and prompt summarization. Stub implementations are deterministic;
// real clients can be swapped in behind the same signatures.
struct AnnotatorPorts {
    std::function<std::string(const ImageTensor&)> global_captioner;
    std::function<std::vector<std::pair<Box, std::string>>(const ImageTensor&)> region_describer;
    std::function<std::vector<OcrLine>(const ImageTensor&)> ocr_reader;
    std::function<std::vector<std::pair<Box, double>>(const ImageTensor&)> segmenter;
    std::function<std::string(const ImageTensor&, const Box&)> object_describer;
    std::function<double(const ImageTensor&, const Box&, const std::string&)> matcher;
    std::function<std::string(const std::string&)> summarizer;
};

// Runs the ports in pipeline order: global caption, regions, OCR, segments
// (kept when pred-iou >= seg_iou_threshold) with per-segment descriptions,
// then match scores for every described region. A failing port leaves its
// channel empty and records a warning; the bundle always completes.
AnnotationBundle annotate(const ImageRecord& record, const ImageTensor& image,
                          const AnnotatorPorts& ports, const PipelineParams& params);

// Drops regions scoring below the threshold; survivor order is preserved.
AnnotationBundle filter_regions(AnnotationBundle bundle, double itm_threshold);

// Deterministic sectioned summarizer prompt. Regions sort by (y, x, w, h);
// OCR lines are emitted in reading order (top-to-bottom, left-to-right).
std::string merge_prompt(const AnnotationBundle& bundle);

struct CaptionRecord {
    std::string id;
    std::string detailed_caption;
    std::string prompt;
    PipelineParams params;
};

CaptionRecord generate_description(const ImageRecord& record, const ImageTensor& image,
                                   const AnnotatorPorts& ports, const PipelineParams& params);

std::string caption_record_to_json_line(const CaptionRecord& record);
std::string image_record_to_json_line(const ImageRecord& record);
ImageRecord image_record_from_json_line(const std::string& line);
std::vector<ImageRecord> read_image_records(const std::filesystem::path& path);

struct CaptionRunStats {
    std::size_t processed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

// Batch runner over a line-delimited input corpus. Processed ids persist in
// a ledger file, so an interrupted run resumes with only the missing ids and
// the combined output matches a single pass. Summarizer failures quarantine
// the record (with its prompt) to `failures_path`.
CaptionRunStats generate_descriptions(
    const std::filesystem::path& input_path, const std::filesystem::path& output_path,
    const std::filesystem::path& ledger_path, const std::filesystem::path& failures_path,
    const AnnotatorPorts& ports, const PipelineParams& params,
    const std::function<ImageTensor(const ImageRecord&)>& load_image);

}  // namespace patchlm
