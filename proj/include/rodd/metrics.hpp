#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rodd/camera.hpp"
#include "rodd/labeling.hpp"

namespace rodd {

struct Detection {
    std::string image_id;
    PixelBox bbox;
    double score = 0.0;  // [0, 1]
};

struct GtBox {
    PixelBox bbox;
    bool extended = false;  // false: In ODD, true: Extended ODD
};

// Ground truth per image. Images with no boxes still count: their
// detections are false positives.
struct GroundTruthSet {
    std::map<std::string, std::vector<GtBox>> images;

    std::size_t in_count() const;
    std::size_t extended_count() const;
};

GroundTruthSet ground_truth_from_manifest(const DatasetManifest& manifest);

struct EvalConfig {
    // Detections at or below this score are discarded before matching
    // (strictly-greater filter).
    double score_threshold = 0.5;
    // Averaged mAP follows the common detection-benchmark grid; the exact
    // set is echoed into every report since conventions differ.
    std::vector<double> iou_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                          0.75, 0.80, 0.85, 0.90, 0.95};
    double map50_threshold = 0.50;
    double map75_threshold = 0.75;
    // Largest extended pool the exhaustive e-mAP search accepts.
    std::size_t exhaustive_limit = 20;
};

void validate(const EvalConfig& cfg);

// Intersection over union on corner-converted boxes.
double iou(const PixelBox& a, const PixelBox& b);

struct MatchResult {
    std::vector<int> det_to_gt;  // per detection (input order); -1 = unmatched
    std::vector<bool> gt_matched;
    int tp_count = 0;
};

// Greedy one-to-one matching for a single image: detections in descending
// score order (ties keep input order) each take the unmatched ground truth
// with the highest IoU >= tau; IoU ties go to the earlier ground truth.
MatchResult match(const std::vector<PixelBox>& gts, const std::vector<Detection>& dets,
                  double tau);

struct ApImage {
    std::string image_id;
    std::vector<PixelBox> gts;
    std::vector<Detection> dets;
};

// Pooled average precision at one IoU threshold: detections from all images
// ranked by descending score (ties broken by image id, then input order),
// area under the precision envelope with all-point interpolation. There is
// a single class, so the dataset mAP coincides with this AP. Throws when
// the ground-truth total is zero rather than returning 0.
double average_precision(const std::vector<ApImage>& images, double tau);

using DetectionMap = std::map<std::string, std::vector<Detection>>;

// Groups by image id; every id must exist in the ground truth's image set.
DetectionMap group_detections(const GroundTruthSet& gt, const std::vector<Detection>& dets);

struct MapTriple {
    double map = 0.0;    // mean over EvalConfig::iou_thresholds
    double map50 = 0.0;
    double map75 = 0.0;
};

// Detections are expected pre-filtered by the score threshold.
MapTriple map_suite(const GroundTruthSet& gt, bool include_extended, const DetectionMap& dets,
                    const EvalConfig& cfg);

// A stable identifier for one extended ground truth within the dataset.
struct ExtendedRef {
    std::string image_id;
    std::size_t gt_index = 0;  // index into that image's GtBox list

    auto operator<=>(const ExtendedRef&) const = default;
};

std::vector<ExtendedRef> extended_pool(const GroundTruthSet& gt);

struct EMapResult {
    double value = 0.0;
    std::vector<ExtendedRef> chosen;  // the maximizing subset J
};

// Exhaustive maximum of the AP over all subsets of the extended pool added
// to the In-ODD targets. Empty subsets win ties, so J* is empty whenever
// nothing matches an extended box. Refuses pools above `limit` (use the
// greedy variant there).
EMapResult e_map_exact(const GroundTruthSet& gt, const DetectionMap& dets, double tau,
                       std::size_t limit = 20);

// Polynomial approximation of e_map_exact: seed J with every extended box
// that receives a match when matching runs against the full pool, then
// improve by single add/remove toggles until a fixpoint, and fall back to
// the empty subset when that scores higher. The fallback makes the result
// dominate the In-ODD AP for every input.
EMapResult e_map_greedy(const GroundTruthSet& gt, const DetectionMap& dets, double tau);

struct EvalRow {
    std::string metric;   // "map" | "e-map"
    std::string test_gt;  // "in_odd" | "in_odd+extended_odd"
    std::size_t gt_count_used = 0;
    std::size_t detection_count = 0;
    MapTriple values;
};

struct EvalReport {
    EvalConfig config;
    EvalRow map_in;        // mAP over In-ODD ground truth
    EvalRow map_combined;  // mAP over In + Extended ground truth
    EvalRow e_map;         // extended mAP, subset chosen per threshold
};

// The three row families over one ground-truth/detections pair. e-mAP picks
// its subset independently per IoU threshold; the row's gt_count_used
// reports |I| + |J*| at the 0.50 threshold, where acceptance is widest.
EvalReport build_report(const GroundTruthSet& gt, const std::vector<Detection>& detections,
                        const EvalConfig& cfg);

// Crossbar matrices: one CSV per metric family (map_in, map_in_extended,
// e_map), rows = model tag, columns = test source, cells = the family's
// averaged mAP. Missing cells stay empty.
std::map<std::string, std::string> crossbar_csv(
    const std::map<std::pair<std::string, std::string>, EvalReport>& cells);

std::vector<Detection> parse_predictions(const std::string& json_text);
std::vector<Detection> load_predictions(const std::string& path);
std::string emit_predictions(const std::vector<Detection>& dets);

std::string emit_report(const EvalReport& report);

}  // namespace rodd
