#include "rodd/labeling.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "rodd/util.hpp"

namespace rodd {

namespace {

using nlohmann::json;

struct CandidateView {
    const RunwayGeometry* runway = nullptr;
    QuadBox quad;
};

// Projection of one runway's corner quad for this pose, or nullopt when it
// cannot be a candidate. A projection-singular corner counts as not visible.
std::optional<QuadBox> view_of(const RunwayGeometry& rw, const CameraPose& camera,
                               const CameraModel& cam, const LabelConfig& lc) {
    std::array<Projection, 4> projected;
    try {
        for (int i = 0; i < 4; ++i) {
            projected[static_cast<std::size_t>(i)] = project(rw.corners[static_cast<std::size_t>(i)], cam, camera);
        }
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    auto quad = quad_to_bbox(projected, cam);
    if (!quad) {
        return std::nullopt;
    }
    if (quad->visible_fraction < lc.min_visible_fraction ||
        quad->box.area() < lc.min_bbox_area_px) {
        return std::nullopt;
    }
    return quad;
}

std::vector<CandidateView> candidate_views(const ScenarioPose& pose, const CameraModel& cam,
                                           const RunwayDatabase& db, const LabelConfig& lc) {
    const CameraPose camera = pose.camera_pose();
    std::vector<CandidateView> views;
    for (const auto& [icao, runways] : db) {
        for (const auto& [id, rw] : runways) {
            if (lc.require_piano && !rw.has_piano) {
                continue;
            }
            if (auto quad = view_of(rw, camera, cam, lc)) {
                views.push_back({&rw, *quad});
            }
        }
    }
    return views;
}

json pose_to_json(const ScenarioPose& pose) {
    return {{"uuid", pose.uuid},
            {"airport", pose.airport},
            {"runway", pose.runway},
            {"pose", pose.pose},
            {"time",
             {{"second", pose.time.second},
              {"minute", pose.time.minute},
              {"hour", pose.time.hour},
              {"day", pose.time.day},
              {"month", pose.time.month},
              {"year", pose.time.year}}}};
}

ScenarioPose pose_from_json(const json& j) {
    ScenarioPose pose;
    pose.uuid = j.at("uuid").get<std::string>();
    pose.airport = j.at("airport").get<std::string>();
    pose.runway = j.at("runway").get<std::string>();
    const auto& arr = j.at("pose");
    if (!arr.is_array() || arr.size() != 6) {
        throw ValidationError("manifest: pose array must carry 6 numbers");
    }
    for (std::size_t i = 0; i < 6; ++i) {
        pose.pose[i] = arr[i].get<double>();
    }
    const auto& t = j.at("time");
    pose.time = {t.at("second").get<int>(), t.at("minute").get<int>(), t.at("hour").get<int>(),
                 t.at("day").get<int>(),    t.at("month").get<int>(),  t.at("year").get<int>()};
    return pose;
}

}  // namespace

void validate(const LabelConfig& lc) {
    if (lc.min_visible_fraction < 0.0 || lc.min_bbox_area_px < 0.0) {
        throw ValidationError("label config thresholds must be non-negative");
    }
}

std::string image_id_for(const ScenarioPose& pose, const LabelConfig& lc) {
    return lc.source_tag.empty() ? pose.uuid : pose.uuid + "_" + lc.source_tag;
}

std::vector<RunwayGeometry> candidate_runways(const ScenarioPose& pose, const CameraModel& cam,
                                              const RunwayDatabase& db, const LabelConfig& lc) {
    validate(lc);
    std::vector<RunwayGeometry> out;
    for (const auto& view : candidate_views(pose, cam, db, lc)) {
        out.push_back(*view.runway);
    }
    return out;
}

std::vector<Annotation> label_image(const ScenarioPose& pose, const CameraModel& cam,
                                    const RunwayDatabase& db, const OddConfig& cfg,
                                    const LabelConfig& lc) {
    validate(lc);
    const GeodeticPoint position = pose.position();
    const Attitude attitude = pose.attitude();

    std::vector<Annotation> annotations;
    for (const auto& view : candidate_views(pose, cam, db, lc)) {
        OddClass odd;
        try {
            const RunwayFrame frame = build_runway_frame(*view.runway);
            odd = classify(pose_parameters(position, attitude, frame), cfg);
        } catch (const ValidationError&) {
            // Degenerate geometry for this candidate (e.g. camera at the
            // VRP): not a labellable approach situation.
            continue;
        }
        if (odd.label == OddLabel::OutOfOdd) {
            continue;
        }
        Annotation a;
        a.image_id = image_id_for(pose, lc);
        a.airport = view.runway->airport_icao;
        a.runway = view.runway->runway_id;
        a.bbox = view.quad.box;
        a.odd_flag = odd.label;
        a.visible_fraction = view.quad.visible_fraction;
        a.odd_detail = odd;
        annotations.push_back(std::move(a));
    }
    return annotations;
}

DatasetManifest label_scenario(const Scenario& scenario, const RunwayDatabase& db,
                               const OddConfig& cfg, const LabelConfig& lc) {
    const CameraModel cam = scenario.image.camera();
    validate(cam);

    DatasetManifest manifest;
    manifest.source_tag = lc.source_tag;
    manifest.image = scenario.image;
    manifest.odd_config_hash = odd_config_hash(cfg);
    for (const auto& pose : scenario.poses) {
        ImageRecord record;
        record.image_id = image_id_for(pose, lc);
        record.pose = pose;
        for (const auto& a : label_image(pose, cam, db, cfg, lc)) {
            record.annotations.push_back(
                {a.airport, a.runway, a.bbox, to_string(a.odd_flag), a.visible_fraction});
        }
        manifest.images.push_back(std::move(record));
    }
    return manifest;
}

std::string emit_manifest(const DatasetManifest& manifest) {
    std::vector<const ImageRecord*> images;
    images.reserve(manifest.images.size());
    for (const auto& rec : manifest.images) {
        images.push_back(&rec);
    }
    std::sort(images.begin(), images.end(),
              [](const ImageRecord* a, const ImageRecord* b) { return a->image_id < b->image_id; });

    json root;
    root["meta"] = {{"source_tag", manifest.source_tag},
                    {"image",
                     {{"w", manifest.image.width},
                      {"h", manifest.image.height},
                      {"fov_x", manifest.image.fov_x},
                      {"fov_y", manifest.image.fov_y}}},
                    {"odd_config_hash", hex64(manifest.odd_config_hash)}};
    json image_array = json::array();
    for (const ImageRecord* rec : images) {
        auto annotations = rec->annotations;
        std::sort(annotations.begin(), annotations.end(),
                  [](const AnnotationRecord& a, const AnnotationRecord& b) {
                      return std::tie(a.airport, a.runway) < std::tie(b.airport, b.runway);
                  });
        json ann_array = json::array();
        for (const auto& a : annotations) {
            ann_array.push_back({{"airport", a.airport},
                                 {"runway", a.runway},
                                 {"bbox", {a.bbox.cx, a.bbox.cy, a.bbox.w, a.bbox.h}},
                                 {"odd", a.odd},
                                 {"visible_fraction", a.visible_fraction}});
        }
        image_array.push_back({{"image_id", rec->image_id},
                               {"pose", pose_to_json(rec->pose)},
                               {"annotations", ann_array}});
    }
    root["images"] = image_array;
    return root.dump(2) + "\n";
}

DatasetManifest parse_manifest(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("manifest: JSON syntax error: ") + e.what());
    }
    try {
        DatasetManifest manifest;
        const auto& meta = root.at("meta");
        manifest.source_tag = meta.at("source_tag").get<std::string>();
        manifest.image.width = meta.at("image").at("w").get<int>();
        manifest.image.height = meta.at("image").at("h").get<int>();
        manifest.image.fov_x = meta.at("image").at("fov_x").get<double>();
        manifest.image.fov_y = meta.at("image").at("fov_y").get<double>();
        manifest.odd_config_hash =
            std::stoull(meta.at("odd_config_hash").get<std::string>(), nullptr, 16);
        for (const auto& img : root.at("images")) {
            ImageRecord record;
            record.image_id = img.at("image_id").get<std::string>();
            record.pose = pose_from_json(img.at("pose"));
            for (const auto& ann : img.at("annotations")) {
                AnnotationRecord a;
                a.airport = ann.at("airport").get<std::string>();
                a.runway = ann.at("runway").get<std::string>();
                const auto& box = ann.at("bbox");
                if (!box.is_array() || box.size() != 4) {
                    throw ValidationError("manifest: bbox must be [cx, cy, w, h]");
                }
                a.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                          box[3].get<double>()};
                a.odd = ann.at("odd").get<std::string>();
                if (a.odd != "in" && a.odd != "extended") {
                    throw ValidationError("manifest: odd flag must be \"in\" or \"extended\"");
                }
                a.visible_fraction = ann.at("visible_fraction").get<double>();
                record.annotations.push_back(std::move(a));
            }
            manifest.images.push_back(std::move(record));
        }
        return manifest;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
}

DatasetManifest load_manifest(const std::string& path) {
    return parse_manifest(read_file(path));
}

}  // namespace rodd
