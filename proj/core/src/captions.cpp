// SPDX-License-Identifier: Apache-2.0
#include "patchlm/captions.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "patchlm/errors.hpp"

namespace patchlm {

using ordered_json = nlohmann::ordered_json;

std::string to_string(RegionSource source) {
    switch (source) {
        case RegionSource::region_describer: return "region_describer";
        case RegionSource::segment: return "segment";
        case RegionSource::ocr: return "ocr";
    }
    throw UsageError("unknown region source");
}

RegionSource region_source_from_string(const std::string& name) {
    if (name == "region_describer") return RegionSource::region_describer;
    if (name == "segment") return RegionSource::segment;
    if (name == "ocr") return RegionSource::ocr;
    throw UsageError("unknown region source: " + name);
}

AnnotationBundle annotate(const ImageRecord& record, const ImageTensor& image,
                          const AnnotatorPorts& ports, const PipelineParams& params) {
    AnnotationBundle bundle;
    bundle.id = record.id;
    bundle.original_caption = record.original_caption;
    bundle.params = params;

    // A failing or unwired port leaves its evidence channel empty and records
    // a warning; the bundle always completes.
    auto guard = [&bundle](const char* name, const auto& port, auto&& apply) {
        if (!port) {
            bundle.warnings.push_back(std::string(name) + ": port not wired");
            return false;
        }
        try {
            apply();
            return true;
        } catch (const std::exception& e) {
            bundle.warnings.push_back(std::string(name) + ": " + e.what());
            return false;
        }
    };

    guard("global_captioner", ports.global_captioner,
          [&] { bundle.global_caption = ports.global_captioner(image); });

    guard("region_describer", ports.region_describer, [&] {
        for (auto& [box, text] : ports.region_describer(image))
            bundle.regions.push_back(Region{box, text, 0.0, RegionSource::region_describer});
    });

    guard("ocr_reader", ports.ocr_reader, [&] { bundle.ocr_lines = ports.ocr_reader(image); });

    std::vector<std::pair<Box, double>> segments;
    guard("segmenter", ports.segmenter, [&] { segments = ports.segmenter(image); });
    for (const auto& [box, pred_iou] : segments) {
        if (pred_iou < params.seg_iou_threshold) continue;
        const Box b = box;
        std::string description;
        if (!guard("object_describer", ports.object_describer,
                   [&] { description = ports.object_describer(image, b); }))
            continue;
        bundle.regions.push_back(Region{b, description, 0.0, RegionSource::segment});
    }

    // Consistency check applies to every described region regardless of its
    // source; OCR lines carry no score and are exempt.
    if (!ports.matcher) {
        bundle.warnings.push_back("matcher: port not wired");
    } else {
        for (Region& region : bundle.regions) {
            const Region& r = region;
            double score = 0.0;
            guard("matcher", ports.matcher,
                  [&] { score = ports.matcher(image, r.box, r.description); });
            region.itm_score = score;
        }
    }
    return bundle;
}

AnnotationBundle filter_regions(AnnotationBundle bundle, double itm_threshold) {
    std::erase_if(bundle.regions,
                  [itm_threshold](const Region& r) { return r.itm_score < itm_threshold; });
    bundle.params.itm_threshold = itm_threshold;
    return bundle;
}

std::string merge_prompt(const AnnotationBundle& bundle) {
    std::vector<const Region*> regions;
    regions.reserve(bundle.regions.size());
    for (const Region& r : bundle.regions) regions.push_back(&r);
    std::stable_sort(regions.begin(), regions.end(), [](const Region* a, const Region* b) {
        return std::tie(a->box.y, a->box.x, a->box.w, a->box.h) <
               std::tie(b->box.y, b->box.x, b->box.w, b->box.h);
    });
    std::vector<const OcrLine*> lines;
    lines.reserve(bundle.ocr_lines.size());
    for (const OcrLine& l : bundle.ocr_lines) lines.push_back(&l);
    std::stable_sort(lines.begin(), lines.end(), [](const OcrLine* a, const OcrLine* b) {
        return std::tie(a->box.y, a->box.x) < std::tie(b->box.y, b->box.x);
    });

    std::ostringstream out;
    out << "Summarize the following image evidence into one detailed description.\n";
    out << "Original caption: " << bundle.original_caption << "\n";
    out << "Global caption: " << bundle.global_caption << "\n";
    out << "Regions:\n";
    if (regions.empty()) {
        out << "(none)\n";
    } else {
        for (const Region* r : regions)
            out << "[" << r->box.x << "," << r->box.y << "," << r->box.w << "," << r->box.h
                << "] " << r->description << "\n";
    }
    out << "Text lines:\n";
    if (lines.empty()) {
        out << "(none)\n";
    } else {
        for (const OcrLine* l : lines)
            out << "[" << l->box.x << "," << l->box.y << "," << l->box.w << "," << l->box.h
                << "] " << l->text << "\n";
    }
    return out.str();
}

CaptionRecord generate_description(const ImageRecord& record, const ImageTensor& image,
                                   const AnnotatorPorts& ports, const PipelineParams& params) {
    AnnotationBundle bundle = annotate(record, image, ports, params);
    bundle = filter_regions(std::move(bundle), params.itm_threshold);
    CaptionRecord out;
    out.id = record.id;
    out.prompt = merge_prompt(bundle);
    out.params = params;
    if (!ports.summarizer) throw UsageError("summarizer: port not wired");
    out.detailed_caption = ports.summarizer(out.prompt);
    return out;
}

std::string caption_record_to_json_line(const CaptionRecord& record) {
    ordered_json j;
    j["id"] = record.id;
    j["detailed_caption"] = record.detailed_caption;
    j["prompt"] = record.prompt;
    j["params"] = {{"itm_threshold", record.params.itm_threshold},
                   {"seg_iou_threshold", record.params.seg_iou_threshold}};
    return j.dump();
}

std::string image_record_to_json_line(const ImageRecord& record) {
    ordered_json j;
    j["id"] = record.id;
    j["image"] = record.image_path;
    j["original_caption"] = record.original_caption;
    return j.dump();
}

ImageRecord image_record_from_json_line(const std::string& line) {
    auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw IoError("malformed image record: " + line);
    ImageRecord r;
    r.id = j.at("id").get<std::string>();
    r.image_path = j.value("image", "");
    r.original_caption = j.value("original_caption", "");
    return r;
}

std::vector<ImageRecord> read_image_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ImageRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(image_record_from_json_line(line));
    }
    return out;
}

CaptionRunStats generate_descriptions(
    const std::filesystem::path& input_path, const std::filesystem::path& output_path,
    const std::filesystem::path& ledger_path, const std::filesystem::path& failures_path,
    const AnnotatorPorts& ports, const PipelineParams& params,
    const std::function<ImageTensor(const ImageRecord&)>& load_image) {
    const std::vector<ImageRecord> records = read_image_records(input_path);

    std::set<std::string> done;
    if (std::filesystem::exists(ledger_path)) {
        std::ifstream ledger(ledger_path);
        std::string id;
        while (std::getline(ledger, id))
            if (!id.empty()) done.insert(id);
    }

    std::ofstream out(output_path, std::ios::app);
    std::ofstream ledger(ledger_path, std::ios::app);
    if (!out || !ledger) throw IoError("cannot open output or ledger for append");

    CaptionRunStats stats;
    for (const ImageRecord& record : records) {
        if (done.count(record.id)) {
            ++stats.skipped;
            continue;
        }
        std::string prompt;
        try {
            const ImageTensor image = load_image(record);
            AnnotationBundle bundle = annotate(record, image, ports, params);
            bundle = filter_regions(std::move(bundle), params.itm_threshold);
            prompt = merge_prompt(bundle);
            if (!ports.summarizer) throw UsageError("summarizer: port not wired");
            CaptionRecord result;
            result.id = record.id;
            result.prompt = prompt;
            result.params = params;
            result.detailed_caption = ports.summarizer(prompt);
            out << caption_record_to_json_line(result) << "\n";
            out.flush();
            ledger << record.id << "\n";
            ledger.flush();
            done.insert(record.id);
            ++stats.processed;
        } catch (const std::exception& e) {
            // Quarantined records stay out of the ledger so a rerun retries them.
            ordered_json j;
            j["id"] = record.id;
            j["prompt"] = prompt;
            j["error"] = e.what();
            std::ofstream failures(failures_path, std::ios::app);
            failures << j.dump() << "\n";
            ++stats.failed;
        }
    }
    return stats;
}

}  // namespace patchlm
