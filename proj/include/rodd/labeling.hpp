#pragma once

#include <string>
#include <vector>

#include "rodd/approach_odd.hpp"
#include "rodd/camera.hpp"
#include "rodd/scenario.hpp"

namespace rodd {

struct LabelConfig {
    // The visibility thresholds decide when a projected runway counts as a
    // candidate at all; both are tunable, with these defaults.
    double min_visible_fraction = 0.25;
    double min_bbox_area_px = 16.0;
    bool require_piano = true;
    std::string source_tag;
};

void validate(const LabelConfig& lc);

// Ground-truth record for one runway in one image. odd_flag is never
// OutOfOdd: such candidates are unlabeled background by design.
struct Annotation {
    std::string image_id;  // pose uuid, suffixed with "_<source_tag>" when set
    std::string airport;
    std::string runway;
    PixelBox bbox;
    OddLabel odd_flag = OddLabel::InOdd;
    double visible_fraction = 1.0;
    OddClass odd_detail;
};

std::string image_id_for(const ScenarioPose& pose, const LabelConfig& lc);

// Runways that could appear in the camera's field of view for this pose:
// piano-filtered (when required), projected quad fully in front of the
// camera, visible_fraction and box area above the configured thresholds.
std::vector<RunwayGeometry> candidate_runways(const ScenarioPose& pose, const CameraModel& cam,
                                              const RunwayDatabase& db, const LabelConfig& lc);

// Classifies every candidate against its own runway frame and emits
// annotations for InOdd and ExtendedOdd candidates only.
std::vector<Annotation> label_image(const ScenarioPose& pose, const CameraModel& cam,
                                    const RunwayDatabase& db, const OddConfig& cfg,
                                    const LabelConfig& lc);

struct AnnotationRecord {
    std::string airport;
    std::string runway;
    PixelBox bbox;
    std::string odd;  // "in" | "extended"
    double visible_fraction = 1.0;
};

struct ImageRecord {
    std::string image_id;
    ScenarioPose pose;
    std::vector<AnnotationRecord> annotations;
};

struct DatasetManifest {
    std::string source_tag;
    ImageGeometry image;
    std::uint64_t odd_config_hash = 0;
    std::vector<ImageRecord> images;
};

// Labels every pose of a scenario. One image record per pose, including
// poses with no valid runway in view (needed for false-positive accounting
// downstream).
DatasetManifest label_scenario(const Scenario& scenario, const RunwayDatabase& db,
                               const OddConfig& cfg, const LabelConfig& lc);

// Serialization is sorted by (image_id, airport, runway), so records may be
// collected in any completion order.
std::string emit_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& json_text);
DatasetManifest load_manifest(const std::string& path);

}  // namespace rodd
