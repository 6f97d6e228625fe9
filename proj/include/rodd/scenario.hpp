#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "rodd/approach_odd.hpp"
#include "rodd/camera.hpp"
#include "rodd/geodesy.hpp"
#include "rodd/random.hpp"

namespace rodd {

struct ScenarioTime {
    int second = 1;
    int minute = 0;
    int hour = 10;
    int day = 1;
    int month = 6;
    int year = 2020;

    bool operator==(const ScenarioTime&) const = default;
};

struct ImageGeometry {
    int height = 1024;
    int width = 1024;
    double fov_x = 60.0;
    double fov_y = 60.0;

    CameraModel camera() const { return {width, height, fov_x, fov_y}; }
    bool operator==(const ImageGeometry&) const = default;
};

struct ScenarioPose {
    std::string uuid;
    std::string airport;
    std::string runway;
    // [longitude deg, latitude deg, altitude m, heading deg true,
    //  tilt deg (0 = nadir, 90 = level horizon), roll deg]
    std::array<double, 6> pose{};
    ScenarioTime time;
    // Unknown keys, preserved verbatim for round-trips.
    std::vector<std::pair<std::string, YAML::Node>> extra;

    GeodeticPoint position() const {
        double lon = pose[0];
        if (lon <= -180.0 || lon > 180.0) {
            lon = wrap_signed_deg(lon);
        }
        return {pose[1], lon, pose[2]};
    }
    Attitude attitude() const { return {wrap_heading_deg(pose[3]), pose[4] - 90.0, pose[5]}; }
    double heading_deg() const { return pose[3]; }
    double tilt_deg() const { return pose[4]; }
    double roll_deg() const { return pose[5]; }

    CameraPose camera_pose() const {
        return CameraPose::from_heading_tilt_roll(position(), pose[3], pose[4], pose[5]);
    }
};

struct Scenario {
    // Airport ICAO -> runway ids, in document order.
    std::vector<std::pair<std::string, std::vector<std::string>>> airports_runways;
    ImageGeometry image;
    std::vector<ScenarioPose> poses;
    std::string runways_database;
    int trajectory_sample_number = 1;
    std::vector<std::pair<std::string, YAML::Node>> extra;

    bool lists_runway(const std::string& airport, const std::string& runway) const;
};

// Parses and validates a scenario document. Numeric pose entries tolerate a
// single trailing comma, which some exporters leave on sequence scalars.
// Errors carry the offending line (syntax) or pose uuid (semantic).
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::string& path);

// Canonical emission; byte-stable for equal scenarios, semantically lossless
// under parse (unknown keys included).
std::string emit_scenario(const Scenario& s);

// Semantic equality (unknown keys compared by their emitted form).
bool semantically_equal(const Scenario& a, const Scenario& b);

// Inverse of pose_parameters: places the aircraft in the runway frame from
// the six pose parameters. Requires along_track < 0 (approach side).
std::pair<GeodeticPoint, Attitude> pose_from_parameters(const PoseParameters& p,
                                                        const RunwayFrame& frame);

struct Distribution {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    // Uniform: explicit bounds, which must lie within the parameter's
    // nominal interval. Normal: mean/stddev, truncated by rejection to the
    // nominal interval.
    double lo = 0.0;
    double hi = 0.0;
    double mean = 0.0;
    double stddev = 1.0;

    static Distribution uniform(double lo, double hi) {
        return {Kind::Uniform, lo, hi, 0.0, 1.0};
    }
    static Distribution normal(double mean, double stddev) {
        return {Kind::Normal, 0.0, 0.0, mean, stddev};
    }
};

struct SamplingSpec {
    // Absent entries default to a uniform draw over the nominal interval.
    std::optional<Distribution> along_track;
    std::optional<Distribution> lateral;
    std::optional<Distribution> vertical;
    std::optional<Distribution> yaw;
    std::optional<Distribution> pitch;
    std::optional<Distribution> roll;
    int poses_per_segment = 10;
    std::uint64_t seed = 0;
};

// Draws poses_per_segment poses per runway and per approach segment,
// forward-constructed so every emitted pose classifies InOdd for its target
// runway. Deterministic for a fixed (spec, seed, runway order).
Scenario sample_scenario(const std::vector<RunwayGeometry>& runways, const SamplingSpec& spec,
                         const OddConfig& cfg, const ImageGeometry& image,
                         const std::string& runways_database_path);

// Airport ICAO -> runway id -> geometry.
using RunwayDatabase = std::map<std::string, std::map<std::string, RunwayGeometry>>;

// JSON schema: { ICAO: { runway_id: { corners: [[lat, lon, alt] x4],
// has_piano: bool, source: string } } }. Duplicate airport or runway keys
// are rejected, and every geometry invariant is validated.
RunwayDatabase parse_runway_db(const std::string& json_text);
RunwayDatabase load_runway_db(const std::string& path);
std::string emit_runway_db(const RunwayDatabase& db);

std::vector<RunwayGeometry> flatten(const RunwayDatabase& db);

struct SplitResult {
    std::uint64_t seed = 0;
    double ratio = 0.5;
    std::vector<std::string> train;  // sorted
    std::vector<std::string> test;   // sorted
};

// Seeded shuffle, then split at round(ratio * N) at airport granularity, so
// no runway of a test airport ever appears in training.
SplitResult split_airports(const std::vector<std::string>& airports, double ratio,
                           std::uint64_t seed);

std::string emit_split(const SplitResult& split);

}  // namespace rodd
