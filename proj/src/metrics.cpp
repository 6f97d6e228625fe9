#include "rodd/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rodd/util.hpp"

namespace rodd {

namespace {

using nlohmann::json;

void validate_box(const PixelBox& box, const std::string& where) {
    if (!(box.w > 0.0) || !(box.h > 0.0)) {
        throw ValidationError(where + ": box width and height must be positive");
    }
}

// Descending score; ties keep input order so results do not depend on the
// sort implementation.
std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });
    return order;
}

// Per-image ground truth lists for one choice of valid targets. pool_slot
// runs parallel to each image's GT list: the extended-pool index of the box,
// or -1 for In-ODD boxes.
struct ViewImage {
    ApImage img;
    std::vector<int> pool_slot;
};

std::vector<ViewImage> dataset_view(const GroundTruthSet& gt, const DetectionMap& dets,
                                    const std::vector<ExtendedRef>& pool,
                                    const std::vector<bool>* selected,
                                    bool include_all_extended) {
    std::vector<ViewImage> view;
    view.reserve(gt.images.size());
    for (const auto& [image_id, boxes] : gt.images) {
        ViewImage entry;
        entry.img.image_id = image_id;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (!boxes[i].extended) {
                entry.img.gts.push_back(boxes[i].bbox);
                entry.pool_slot.push_back(-1);
                continue;
            }
            const ExtendedRef ref{image_id, i};
            const auto it = std::lower_bound(pool.begin(), pool.end(), ref);
            const int slot =
                (it != pool.end() && *it == ref) ? static_cast<int>(it - pool.begin()) : -1;
            if (include_all_extended ||
                (selected && slot >= 0 && (*selected)[static_cast<std::size_t>(slot)])) {
                entry.img.gts.push_back(boxes[i].bbox);
                entry.pool_slot.push_back(slot);
            }
        }
        if (const auto it = dets.find(image_id); it != dets.end()) {
            entry.img.dets = it->second;
        }
        view.push_back(std::move(entry));
    }
    return view;
}

struct SubsetEval {
    double ap = 0.0;
    // True when every selected extended box received a match under this
    // subset's own matching.
    bool all_selected_matched = true;
};

SubsetEval subset_eval(const GroundTruthSet& gt, const DetectionMap& dets,
                       const std::vector<ExtendedRef>& pool, const std::vector<bool>& selected,
                       double tau) {
    const auto view = dataset_view(gt, dets, pool, &selected, false);
    std::vector<ApImage> images;
    images.reserve(view.size());
    SubsetEval out;
    for (const auto& entry : view) {
        const MatchResult m = match(entry.img.gts, entry.img.dets, tau);
        for (std::size_t i = 0; i < entry.img.gts.size(); ++i) {
            if (entry.pool_slot[i] >= 0 && !m.gt_matched[i]) {
                out.all_selected_matched = false;
            }
        }
        images.push_back(entry.img);
    }
    out.ap = average_precision(images, tau);
    return out;
}

double ap_for_subset(const GroundTruthSet& gt, const DetectionMap& dets,
                     const std::vector<ExtendedRef>& pool, const std::vector<bool>& selected,
                     double tau) {
    return subset_eval(gt, dets, pool, selected, tau).ap;
}

std::vector<ExtendedRef> refs_from_mask(const std::vector<ExtendedRef>& pool,
                                        const std::vector<bool>& selected) {
    std::vector<ExtendedRef> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (selected[i]) {
            out.push_back(pool[i]);
        }
    }
    return out;
}

}  // namespace

std::size_t GroundTruthSet::in_count() const {
    std::size_t n = 0;
    for (const auto& [id, boxes] : images) {
        for (const auto& b : boxes) {
            n += b.extended ? 0 : 1;
        }
    }
    return n;
}

std::size_t GroundTruthSet::extended_count() const {
    std::size_t n = 0;
    for (const auto& [id, boxes] : images) {
        for (const auto& b : boxes) {
            n += b.extended ? 1 : 0;
        }
    }
    return n;
}

GroundTruthSet ground_truth_from_manifest(const DatasetManifest& manifest) {
    GroundTruthSet gt;
    for (const auto& rec : manifest.images) {
        auto& boxes = gt.images[rec.image_id];  // record every image, even empty
        for (const auto& ann : rec.annotations) {
            boxes.push_back({ann.bbox, ann.odd == "extended"});
        }
    }
    return gt;
}

void validate(const EvalConfig& cfg) {
    if (!(cfg.score_threshold >= 0.0) || !(cfg.score_threshold < 1.0)) {
        throw ValidationError("eval config: score threshold must lie in [0, 1)");
    }
    if (cfg.iou_thresholds.empty()) {
        throw ValidationError("eval config: iou_thresholds must not be empty");
    }
    for (double t : cfg.iou_thresholds) {
        if (!(t > 0.0) || !(t < 1.0)) {
            throw ValidationError("eval config: IoU thresholds must lie in (0, 1)");
        }
    }
}

double iou(const PixelBox& a, const PixelBox& b) {
    const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
    const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

MatchResult match(const std::vector<PixelBox>& gts, const std::vector<Detection>& dets,
                  double tau) {
    MatchResult result;
    result.det_to_gt.assign(dets.size(), -1);
    result.gt_matched.assign(gts.size(), false);
    for (const std::size_t di : score_order(dets)) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (result.gt_matched[gi]) {
                continue;
            }
            const double overlap = iou(dets[di].bbox, gts[gi]);
            // Strict > keeps the earlier ground truth on equal IoU.
            if (overlap >= tau && overlap > best_iou) {
                best_iou = overlap;
                best = static_cast<int>(gi);
            }
        }
        if (best >= 0) {
            result.det_to_gt[di] = best;
            result.gt_matched[static_cast<std::size_t>(best)] = true;
            ++result.tp_count;
        }
    }
    return result;
}

double average_precision(const std::vector<ApImage>& images, double tau) {
    std::size_t total_gt = 0;
    for (const auto& img : images) {
        total_gt += img.gts.size();
    }
    if (total_gt == 0) {
        throw ValidationError("average precision is undefined on zero ground truth");
    }

    struct Pooled {
        double score;
        bool tp;
        const std::string* image_id;
        std::size_t det_index;
    };
    std::vector<Pooled> pooled;
    for (const auto& img : images) {
        const MatchResult m = match(img.gts, img.dets, tau);
        for (std::size_t i = 0; i < img.dets.size(); ++i) {
            pooled.push_back({img.dets[i].score, m.det_to_gt[i] >= 0, &img.image_id, i});
        }
    }
    // The image-id tie-break makes the ranking independent of the image
    // processing order.
    std::sort(pooled.begin(), pooled.end(), [](const Pooled& a, const Pooled& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        if (*a.image_id != *b.image_id) {
            return *a.image_id < *b.image_id;
        }
        return a.det_index < b.det_index;
    });

    std::vector<double> recall(pooled.size()), precision(pooled.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        tp += pooled[i].tp ? 1 : 0;
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = pooled.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

DetectionMap group_detections(const GroundTruthSet& gt, const std::vector<Detection>& dets) {
    DetectionMap out;
    for (const auto& d : dets) {
        if (gt.images.find(d.image_id) == gt.images.end()) {
            throw ValidationError("detections reference unknown image_id \"" + d.image_id + "\"");
        }
        out[d.image_id].push_back(d);
    }
    return out;
}

MapTriple map_suite(const GroundTruthSet& gt, bool include_extended, const DetectionMap& dets,
                    const EvalConfig& cfg) {
    validate(cfg);
    const std::vector<ExtendedRef> pool;  // unused in the fixed views
    std::vector<ApImage> images;
    for (auto& entry : dataset_view(gt, dets, pool, nullptr, include_extended)) {
        images.push_back(std::move(entry.img));
    }

    MapTriple out;
    double sum = 0.0;
    for (double tau : cfg.iou_thresholds) {
        sum += average_precision(images, tau);
    }
    out.map = sum / static_cast<double>(cfg.iou_thresholds.size());
    out.map50 = average_precision(images, cfg.map50_threshold);
    out.map75 = average_precision(images, cfg.map75_threshold);
    return out;
}

std::vector<ExtendedRef> extended_pool(const GroundTruthSet& gt) {
    std::vector<ExtendedRef> pool;
    for (const auto& [image_id, boxes] : gt.images) {
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (boxes[i].extended) {
                pool.push_back({image_id, i});
            }
        }
    }
    return pool;  // map order keeps this sorted
}

EMapResult e_map_exact(const GroundTruthSet& gt, const DetectionMap& dets, double tau,
                       std::size_t limit) {
    const auto pool = extended_pool(gt);
    if (pool.size() > limit) {
        throw ValidationError("e-mAP exhaustive search refused: extended pool of " +
                              std::to_string(pool.size()) + " exceeds the limit of " +
                              std::to_string(limit) + " (use e_map_greedy)");
    }
    // Ties on the value fall to the subset that keeps the most matched
    // extended boxes; subsets carrying an unmatched (pure-FN) member never
    // win a tie, so J* stays empty when nothing matches an extended box.
    EMapResult best;
    std::vector<bool> selected(pool.size(), false);
    best.value = subset_eval(gt, dets, pool, selected, tau).ap;
    long best_key = 0;

    const std::uint64_t subsets = 1ULL << pool.size();
    for (std::uint64_t mask = 1; mask < subsets; ++mask) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            selected[i] = (mask >> i) & 1ULL;
        }
        const SubsetEval eval = subset_eval(gt, dets, pool, selected, tau);
        const long key =
            eval.all_selected_matched ? static_cast<long>(std::popcount(mask)) : -1L;
        if (eval.ap > best.value || (eval.ap == best.value && key > best_key)) {
            best.value = eval.ap;
            best.chosen = refs_from_mask(pool, selected);
            best_key = key;
        }
    }
    return best;
}

EMapResult e_map_greedy(const GroundTruthSet& gt, const DetectionMap& dets, double tau) {
    const auto pool = extended_pool(gt);

    // Seed: every extended box that receives a match against the full pool.
    std::vector<bool> selected(pool.size(), false);
    for (const auto& entry : dataset_view(gt, dets, pool, nullptr, true)) {
        const MatchResult m = match(entry.img.gts, entry.img.dets, tau);
        for (std::size_t i = 0; i < entry.img.gts.size(); ++i) {
            if (entry.pool_slot[i] >= 0 && m.gt_matched[i]) {
                selected[static_cast<std::size_t>(entry.pool_slot[i])] = true;
            }
        }
    }

    double value = ap_for_subset(gt, dets, pool, selected, tau);

    // Single-toggle local improvement; every acceptance strictly increases
    // the AP, so the loop terminates.
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            selected[i] = !selected[i];
            const double candidate = ap_for_subset(gt, dets, pool, selected, tau);
            if (candidate > value) {
                value = candidate;
                improved = true;
            } else {
                selected[i] = !selected[i];
            }
        }
    }

    // Empty-subset fallback: guarantees dominance over the In-ODD AP.
    const std::vector<bool> none(pool.size(), false);
    const double empty_value = ap_for_subset(gt, dets, pool, none, tau);
    EMapResult out;
    if (empty_value > value) {
        out.value = empty_value;
        return out;
    }
    out.value = value;
    out.chosen = refs_from_mask(pool, selected);
    return out;
}

EvalReport build_report(const GroundTruthSet& gt, const std::vector<Detection>& detections,
                        const EvalConfig& cfg) {
    validate(cfg);
    std::vector<Detection> filtered;
    for (const auto& d : detections) {
        if (!(d.score >= 0.0) || !(d.score <= 1.0)) {
            throw ValidationError("detection score out of [0, 1] on image " + d.image_id);
        }
        validate_box(d.bbox, "detection on image " + d.image_id);
        if (d.score > cfg.score_threshold) {
            filtered.push_back(d);
        }
    }
    const DetectionMap det_map = group_detections(gt, filtered);

    const std::size_t in_count = gt.in_count();
    const std::size_t ext_count = gt.extended_count();

    EvalReport report;
    report.config = cfg;
    report.map_in = {"map", "in_odd", in_count, filtered.size(),
                     map_suite(gt, false, det_map, cfg)};
    report.map_combined = {"map", "in_odd+extended_odd", in_count + ext_count, filtered.size(),
                           map_suite(gt, true, det_map, cfg)};

    const auto e_map_at = [&](double tau) {
        const auto pool = extended_pool(gt);
        return pool.size() <= cfg.exhaustive_limit
                   ? e_map_exact(gt, det_map, tau, cfg.exhaustive_limit)
                   : e_map_greedy(gt, det_map, tau);
    };

    MapTriple e_values;
    double sum = 0.0;
    for (double tau : cfg.iou_thresholds) {
        sum += e_map_at(tau).value;
    }
    e_values.map = sum / static_cast<double>(cfg.iou_thresholds.size());
    const EMapResult at50 = e_map_at(cfg.map50_threshold);
    e_values.map50 = at50.value;
    e_values.map75 = e_map_at(cfg.map75_threshold).value;

    report.e_map = {"e-map", "in_odd+extended_odd", in_count + at50.chosen.size(),
                    filtered.size(), e_values};
    return report;
}

std::map<std::string, std::string> crossbar_csv(
    const std::map<std::pair<std::string, std::string>, EvalReport>& cells) {
    std::vector<std::string> tags, sources;
    for (const auto& [key, report] : cells) {
        tags.push_back(key.first);
        sources.push_back(key.second);
    }
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

    const auto family_value = [](const EvalReport& r, const std::string& family) {
        if (family == "map_in") {
            return r.map_in.values.map;
        }
        if (family == "map_in_extended") {
            return r.map_combined.values.map;
        }
        return r.e_map.values.map;
    };

    std::map<std::string, std::string> out;
    for (const std::string family : {"map_in", "map_in_extended", "e_map"}) {
        std::ostringstream csv;
        csv << "model";
        for (const auto& src : sources) {
            csv << "," << src;
        }
        csv << "\n";
        for (const auto& tag : tags) {
            csv << tag;
            for (const auto& src : sources) {
                csv << ",";
                const auto it = cells.find({tag, src});
                if (it != cells.end()) {
                    csv << format_double(family_value(it->second, family));
                }
            }
            csv << "\n";
        }
        out[family] = csv.str();
    }
    return out;
}

std::vector<Detection> parse_predictions(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("predictions: JSON syntax error: ") + e.what());
    }
    if (!root.is_array()) {
        throw ValidationError("predictions: document must be a JSON array");
    }
    std::vector<Detection> out;
    for (const auto& entry : root) {
        try {
            Detection d;
            d.image_id = entry.at("image_id").get<std::string>();
            const auto& box = entry.at("bbox");
            if (!box.is_array() || box.size() != 4) {
                throw ValidationError("predictions: bbox must be [cx, cy, w, h]");
            }
            d.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                      box[3].get<double>()};
            d.score = entry.at("score").get<double>();
            if (!(d.score >= 0.0) || !(d.score <= 1.0)) {
                throw ValidationError("predictions: score out of [0, 1] on image " + d.image_id);
            }
            validate_box(d.bbox, "predictions: image " + d.image_id);
            out.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("predictions: ") + e.what());
        }
    }
    return out;
}

std::vector<Detection> load_predictions(const std::string& path) {
    return parse_predictions(read_file(path));
}

std::string emit_predictions(const std::vector<Detection>& dets) {
    json root = json::array();
    for (const auto& d : dets) {
        root.push_back({{"image_id", d.image_id},
                        {"bbox", {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h}},
                        {"score", d.score}});
    }
    return root.dump(2) + "\n";
}

std::string emit_report(const EvalReport& report) {
    const auto row = [](const EvalRow& r) {
        return json{{"metric", r.metric},
                    {"test_gt", r.test_gt},
                    {"gt_count_used", r.gt_count_used},
                    {"detections", r.detection_count},
                    {"map", r.values.map},
                    {"map50", r.values.map50},
                    {"map75", r.values.map75}};
    };
    const json j = {{"config",
                     {{"score_threshold", report.config.score_threshold},
                      {"iou_thresholds", report.config.iou_thresholds},
                      {"exhaustive_limit", report.config.exhaustive_limit}}},
                    {"rows", {row(report.map_in), row(report.map_combined), row(report.e_map)}}};
    return j.dump(2) + "\n";
}

}  // namespace rodd
