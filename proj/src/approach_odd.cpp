#include "rodd/approach_odd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rodd/util.hpp"

namespace rodd {

namespace {

int nearest_segment(double along_track_m, const OddConfig& cfg) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const double dist = cfg.segments[i].along_track.distance_to(along_track_m);
        if (dist < best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    return best;
}

ParameterCheck check_parameter(OddParameter which, double value, const Interval& nominal,
                               double factor) {
    ParameterCheck check;
    check.parameter = which;
    check.value = value;
    check.nominal = nominal;
    check.extended = extended_interval(nominal, factor);
    if (nominal.contains(value)) {
        check.status = ParamStatus::Nominal;
    } else if (check.extended.contains(value)) {
        check.status = ParamStatus::Extended;
    } else {
        check.status = ParamStatus::Out;
    }
    return check;
}

Interval parse_interval(const YAML::Node& node, const std::string& name) {
    if (!node || !node.IsSequence() || node.size() != 2) {
        throw ValidationError("odd config: \"" + name + "\" must be a [lo, hi] pair");
    }
    Interval i{node[0].as<double>(), node[1].as<double>()};
    if (!(i.lo <= i.hi)) {
        throw ValidationError("odd config: \"" + name + "\" has lo > hi");
    }
    return i;
}

void emit_interval(std::ostringstream& out, const char* name, const Interval& i,
                   const char* indent) {
    out << indent << name << ": [" << format_double(i.lo) << ", " << format_double(i.hi) << "]\n";
}

}  // namespace

double Interval::distance_to(double x) const {
    if (contains(x)) {
        return 0.0;
    }
    return x < lo ? lo - x : x - hi;
}

Interval extended_interval(const Interval& i, double factor) {
    if (!(factor >= 1.0)) {
        throw ValidationError("extension factor must be >= 1");
    }
    const double mid = i.midpoint();
    const double half = factor * i.half_width();
    return {mid - half, mid + half};
}

void validate(const OddConfig& cfg) {
    if (!(cfg.extension_factor >= 1.0)) {
        throw ValidationError("odd config: extension_factor must be >= 1");
    }
    for (const auto& i : {cfg.lateral, cfg.vertical, cfg.pitch}) {
        if (!(i.lo <= i.hi)) {
            throw ValidationError("odd config: interval has lo > hi");
        }
    }
    for (int i = 0; i < 3; ++i) {
        const auto& seg = cfg.segments[i];
        if (!(seg.along_track.lo < seg.along_track.hi)) {
            throw ValidationError("odd config: segment along-track interval is empty");
        }
        if (!(seg.yaw.lo <= seg.yaw.hi) || !(seg.roll.lo <= seg.roll.hi)) {
            throw ValidationError("odd config: segment yaw/roll interval has lo > hi");
        }
        if (i > 0 &&
            std::abs(cfg.segments[i - 1].along_track.hi - seg.along_track.lo) > 1e-9) {
            throw ValidationError(
                "odd config: segments must be contiguous and ordered far-to-near");
        }
    }
}

Interval extended_along_track(const OddConfig& cfg, int segment_index) {
    Interval ext =
        extended_interval(cfg.segments[static_cast<std::size_t>(segment_index)].along_track,
                          cfg.extension_factor);
    if (cfg.clamp_along_track_hi_to_zero && ext.hi > 0.0) {
        ext.hi = 0.0;
    }
    return ext;
}

const char* to_string(OddLabel label) {
    switch (label) {
        case OddLabel::InOdd: return "in";
        case OddLabel::ExtendedOdd: return "extended";
        case OddLabel::OutOfOdd: return "out";
    }
    return "out";
}

const char* to_string(ParamStatus status) {
    switch (status) {
        case ParamStatus::Nominal: return "nominal";
        case ParamStatus::Extended: return "extended";
        case ParamStatus::Out: return "out";
    }
    return "out";
}

const char* to_string(OddParameter parameter) {
    switch (parameter) {
        case OddParameter::AlongTrack: return "along_track";
        case OddParameter::Lateral: return "lateral_path_angle";
        case OddParameter::Vertical: return "vertical_path_angle";
        case OddParameter::Yaw: return "relative_yaw";
        case OddParameter::Pitch: return "pitch";
        case OddParameter::Roll: return "roll";
    }
    return "along_track";
}

std::optional<SegmentChoice> segment_for(double along_track_m, const OddConfig& cfg) {
    if (!std::isfinite(along_track_m)) {
        throw ValidationError("segment lookup requires a finite along-track distance");
    }
    for (int i = 0; i < 3; ++i) {
        if (cfg.segments[i].along_track.contains(along_track_m)) {
            return SegmentChoice{i, false};
        }
    }
    for (int i = 0; i < 3; ++i) {
        if (extended_along_track(cfg, i).contains(along_track_m)) {
            return SegmentChoice{nearest_segment(along_track_m, cfg), true};
        }
    }
    return std::nullopt;
}

OddClass classify(const PoseParameters& p, const OddConfig& cfg) {
    const auto choice = segment_for(p.along_track_m, cfg);
    // Out-of-envelope positions are still reported against the nearest
    // segment's ranges.
    const int seg = choice ? choice->index : nearest_segment(p.along_track_m, cfg);
    const auto& segment = cfg.segments[static_cast<std::size_t>(seg)];

    OddClass result;
    result.segment_index = seg;

    ParameterCheck along;
    along.parameter = OddParameter::AlongTrack;
    along.value = p.along_track_m;
    along.nominal = segment.along_track;
    along.extended = extended_along_track(cfg, seg);
    along.status = !choice               ? ParamStatus::Out
                   : choice->extended    ? ParamStatus::Extended
                                         : ParamStatus::Nominal;
    result.per_parameter[0] = along;

    result.per_parameter[1] = check_parameter(OddParameter::Lateral, p.lateral_path_angle_deg,
                                              cfg.lateral, cfg.extension_factor);
    result.per_parameter[2] = check_parameter(OddParameter::Vertical, p.vertical_path_angle_deg,
                                              cfg.vertical, cfg.extension_factor);
    result.per_parameter[3] = check_parameter(OddParameter::Yaw, p.relative_yaw_deg, segment.yaw,
                                              cfg.extension_factor);
    result.per_parameter[4] =
        check_parameter(OddParameter::Pitch, p.pitch_deg, cfg.pitch, cfg.extension_factor);
    result.per_parameter[5] = check_parameter(OddParameter::Roll, p.roll_deg, segment.roll,
                                              cfg.extension_factor);

    bool any_out = false;
    bool any_extended = false;
    for (const auto& check : result.per_parameter) {
        any_out = any_out || check.status == ParamStatus::Out;
        any_extended = any_extended || check.status == ParamStatus::Extended;
    }
    result.label = any_out        ? OddLabel::OutOfOdd
                   : any_extended ? OddLabel::ExtendedOdd
                                  : OddLabel::InOdd;
    return result;
}

OddConfig parse_odd_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ValidationError("odd config: YAML syntax error at line " +
                              std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap()) {
        throw ValidationError("odd config: document must be a mapping");
    }

    OddConfig cfg;
    const YAML::Node segments = root["segments"];
    if (!segments || !segments.IsSequence() || segments.size() != 3) {
        throw ValidationError("odd config: \"segments\" must list exactly 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        cfg.segments[i].along_track = parse_interval(segments[i]["along_track"], "along_track");
        cfg.segments[i].yaw = parse_interval(segments[i]["yaw"], "yaw");
        cfg.segments[i].roll = parse_interval(segments[i]["roll"], "roll");
    }
    cfg.lateral = parse_interval(root["lateral"], "lateral");
    cfg.vertical = parse_interval(root["vertical"], "vertical");
    cfg.pitch = parse_interval(root["pitch"], "pitch");
    if (root["extension_factor"]) {
        cfg.extension_factor = root["extension_factor"].as<double>();
    }
    if (root["clamp_along_track_hi_to_zero"]) {
        cfg.clamp_along_track_hi_to_zero = root["clamp_along_track_hi_to_zero"].as<bool>();
    }
    validate(cfg);
    return cfg;
}

std::string emit_odd_config(const OddConfig& cfg) {
    std::ostringstream out;
    out << "segments:\n";
    for (const auto& seg : cfg.segments) {
        out << "  - along_track: [" << format_double(seg.along_track.lo) << ", "
            << format_double(seg.along_track.hi) << "]\n";
        emit_interval(out, "yaw", seg.yaw, "    ");
        emit_interval(out, "roll", seg.roll, "    ");
    }
    emit_interval(out, "lateral", cfg.lateral, "");
    emit_interval(out, "vertical", cfg.vertical, "");
    emit_interval(out, "pitch", cfg.pitch, "");
    out << "extension_factor: " << format_double(cfg.extension_factor) << "\n";
    out << "clamp_along_track_hi_to_zero: " << (cfg.clamp_along_track_hi_to_zero ? "true" : "false")
        << "\n";
    return out.str();
}

std::uint64_t odd_config_hash(const OddConfig& cfg) {
    return fnv1a64(emit_odd_config(cfg));
}

}  // namespace rodd
