#include "rodd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rodd/util.hpp"

namespace rodd {

namespace {

using nlohmann::json;

// yaml-cpp keeps parsed scalars as raw text, so numbers inside preserved
// unknown nodes survive re-emission untouched.
void emit_extra(std::ostringstream& out, const std::string& key, const YAML::Node& node,
                int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    YAML::Emitter em;
    em << node;
    const std::string body = em.c_str();
    if (node.IsScalar() || body.find('\n') == std::string::npos) {
        out << pad << key << ": " << body << "\n";
        return;
    }
    out << pad << key << ":\n";
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
        out << pad << "  " << line << "\n";
    }
}

double lenient_double(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsScalar()) {
        throw ValidationError("scenario: " + what + " must be a number");
    }
    std::string text = node.Scalar();
    // Tolerate one trailing comma, seen in scenario files written by hand.
    if (!text.empty() && text.back() == ',') {
        text.pop_back();
    }
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return value;
    } catch (const std::exception&) {
        throw ValidationError("scenario: " + what + " is not a number: \"" + node.Scalar() + "\"");
    }
}

int int_field(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsScalar()) {
        throw ValidationError("scenario: " + what + " must be an integer");
    }
    try {
        return node.as<int>();
    } catch (const YAML::Exception&) {
        throw ValidationError("scenario: " + what + " is not an integer: \"" + node.Scalar() +
                              "\"");
    }
}

void check_range(int value, int lo, int hi, const std::string& what, const std::string& uuid) {
    if (value < lo || value > hi) {
        throw ValidationError("scenario: pose " + uuid + ": " + what + " out of range [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

ScenarioPose parse_pose(const YAML::Node& node, std::size_t index) {
    if (!node.IsMap()) {
        throw ValidationError("scenario: poses[" + std::to_string(index) + "] must be a mapping");
    }
    ScenarioPose p;
    bool saw_pose = false, saw_time = false;
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        const YAML::Node value = kv.second;
        if (key == "uuid") {
            p.uuid = value.as<std::string>();
        } else if (key == "airport") {
            p.airport = value.as<std::string>();
        } else if (key == "runway") {
            p.runway = value.as<std::string>();
        } else if (key == "pose") {
            if (!value.IsSequence() || value.size() != 6) {
                throw ValidationError("scenario: poses[" + std::to_string(index) +
                                      "].pose must list 6 numbers");
            }
            for (std::size_t i = 0; i < 6; ++i) {
                p.pose[i] = lenient_double(value[i], "pose entry " + std::to_string(i));
            }
            saw_pose = true;
        } else if (key == "time") {
            if (!value.IsMap()) {
                throw ValidationError("scenario: poses[" + std::to_string(index) +
                                      "].time must be a mapping");
            }
            p.time.second = int_field(value["second"], "time.second");
            p.time.minute = int_field(value["minute"], "time.minute");
            p.time.hour = int_field(value["hour"], "time.hour");
            p.time.day = int_field(value["day"], "time.day");
            p.time.month = int_field(value["month"], "time.month");
            p.time.year = int_field(value["year"], "time.year");
            saw_time = true;
        } else {
            p.extra.emplace_back(key, YAML::Clone(value));
        }
    }
    if (p.uuid.empty()) {
        throw ValidationError("scenario: poses[" + std::to_string(index) + "] is missing a uuid");
    }
    if (p.airport.empty() || p.runway.empty()) {
        throw ValidationError("scenario: pose " + p.uuid + " is missing airport or runway");
    }
    if (!saw_pose) {
        throw ValidationError("scenario: pose " + p.uuid + " is missing the pose array");
    }
    if (!saw_time) {
        throw ValidationError("scenario: pose " + p.uuid + " is missing the time block");
    }
    check_range(p.time.second, 0, 59, "time.second", p.uuid);
    check_range(p.time.minute, 0, 59, "time.minute", p.uuid);
    check_range(p.time.hour, 0, 23, "time.hour", p.uuid);
    check_range(p.time.day, 1, 31, "time.day", p.uuid);
    check_range(p.time.month, 1, 12, "time.month", p.uuid);
    check_range(p.time.year, 1, 9999, "time.year", p.uuid);
    if (p.pose[1] < -90.0 || p.pose[1] > 90.0) {
        throw ValidationError("scenario: pose " + p.uuid + ": latitude out of [-90, 90]");
    }
    for (double v : p.pose) {
        if (!std::isfinite(v)) {
            throw ValidationError("scenario: pose " + p.uuid + ": non-finite pose entry");
        }
    }
    return p;
}

std::string make_uuid(Rng& rng) {
    const std::uint64_t hi = rng.next_u64();
    const std::uint64_t lo = rng.next_u64();
    unsigned char bytes[16];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>(hi >> (8 * (7 - i)));
        bytes[8 + i] = static_cast<unsigned char>(lo >> (8 * (7 - i)));
    }
    bytes[6] = static_cast<unsigned char>(0x40 | (bytes[6] & 0x0f));  // version 4 layout
    bytes[8] = static_cast<unsigned char>(0x80 | (bytes[8] & 0x3f));
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (int i = 0; i < 16; ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) {
            out += '-';
        }
        out += hex[bytes[i] >> 4];
        out += hex[bytes[i] & 0x0f];
    }
    return out;
}

double draw(const std::optional<Distribution>& dist, const Interval& nominal, Rng& rng,
            const char* what) {
    if (!dist) {
        return rng.uniform(nominal.lo, nominal.hi);
    }
    if (dist->kind == Distribution::Kind::Uniform) {
        if (dist->lo < nominal.lo || dist->hi > nominal.hi || dist->lo > dist->hi) {
            throw ValidationError(std::string("sampling: uniform bounds for ") + what +
                                  " must lie within its nominal interval");
        }
        return rng.uniform(dist->lo, dist->hi);
    }
    return rng.truncated_normal(dist->mean, dist->stddev, nominal.lo, nominal.hi);
}

GeodeticPoint corner_from_json(const json& entry, const std::string& where) {
    if (!entry.is_array() || entry.size() != 3 || !entry[0].is_number() ||
        !entry[1].is_number() || !entry[2].is_number()) {
        throw ValidationError("runway database: corner at " + where +
                              " must be a [lat, lon, alt] triple");
    }
    GeodeticPoint p{entry[0].get<double>(), entry[1].get<double>(), entry[2].get<double>()};
    validate(p);
    return p;
}

// nlohmann keeps the last value for repeated keys, which would silently drop
// runways; scan for duplicates during parse instead.
json parse_json_checked(const std::string& text, const char* what) {
    std::vector<std::set<std::string>> scopes;
    std::vector<std::string> duplicates;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::object_start) {
            scopes.emplace_back();
        } else if (event == json::parse_event_t::object_end) {
            scopes.pop_back();
        } else if (event == json::parse_event_t::key) {
            const auto key = parsed.get<std::string>();
            if (!scopes.back().insert(key).second) {
                duplicates.push_back(key);
            }
        }
        return true;
    };
    json j;
    try {
        j = json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string(what) + ": JSON syntax error: " + e.what());
    }
    if (!duplicates.empty()) {
        throw ValidationError(std::string(what) + ": duplicate key \"" + duplicates.front() +
                              "\"");
    }
    return j;
}

}  // namespace

bool Scenario::lists_runway(const std::string& airport, const std::string& runway) const {
    for (const auto& [icao, runways] : airports_runways) {
        if (icao == airport) {
            return std::find(runways.begin(), runways.end(), runway) != runways.end();
        }
    }
    return false;
}

Scenario parse_scenario(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ValidationError("scenario: YAML syntax error at line " +
                              std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap()) {
        throw ValidationError("scenario: document must be a mapping");
    }

    Scenario s;
    bool saw_airports = false, saw_image = false, saw_poses = false;
    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        const YAML::Node value = kv.second;
        if (key == "airports_runways") {
            if (!value.IsMap()) {
                throw ValidationError("scenario: airports_runways must be a mapping");
            }
            for (const auto& airport : value) {
                const std::string icao = airport.first.as<std::string>();
                std::vector<std::string> runways;
                if (!airport.second.IsSequence()) {
                    throw ValidationError("scenario: airports_runways." + icao +
                                          " must list runway ids");
                }
                for (const auto& rw : airport.second) {
                    runways.push_back(rw.as<std::string>());
                }
                s.airports_runways.emplace_back(icao, std::move(runways));
            }
            saw_airports = true;
        } else if (key == "image") {
            s.image.height = int_field(value["height"], "image.height");
            s.image.width = int_field(value["width"], "image.width");
            s.image.fov_x = lenient_double(value["fov_x"], "image.fov_x");
            s.image.fov_y = lenient_double(value["fov_y"], "image.fov_y");
            if (s.image.height < 1 || s.image.width < 1 || !(s.image.fov_x > 0.0) ||
                !(s.image.fov_y > 0.0)) {
                throw ValidationError("scenario: image fields must be positive");
            }
            saw_image = true;
        } else if (key == "poses") {
            if (!value.IsSequence()) {
                throw ValidationError("scenario: poses must be a sequence");
            }
            for (std::size_t i = 0; i < value.size(); ++i) {
                s.poses.push_back(parse_pose(value[i], i));
            }
            saw_poses = true;
        } else if (key == "runways_database") {
            s.runways_database = value.as<std::string>();
        } else if (key == "trajectory") {
            if (!value.IsMap() || !value["sample_number"]) {
                throw ValidationError("scenario: trajectory must carry sample_number");
            }
            s.trajectory_sample_number = int_field(value["sample_number"], "sample_number");
            if (s.trajectory_sample_number < 1) {
                throw ValidationError("scenario: trajectory.sample_number must be >= 1");
            }
        } else {
            s.extra.emplace_back(key, YAML::Clone(value));
        }
    }
    if (!saw_airports) {
        throw ValidationError("scenario: missing required field airports_runways");
    }
    if (!saw_image) {
        throw ValidationError("scenario: missing required field image");
    }
    if (!saw_poses) {
        throw ValidationError("scenario: missing required field poses");
    }

    std::set<std::string> uuids;
    for (const auto& p : s.poses) {
        if (!uuids.insert(p.uuid).second) {
            throw ValidationError("scenario: duplicate pose uuid " + p.uuid);
        }
        if (!s.lists_runway(p.airport, p.runway)) {
            throw ValidationError("scenario: pose " + p.uuid + " references runway " + p.airport +
                                  "/" + p.runway + " absent from airports_runways");
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    return parse_scenario(read_file(path));
}

std::string emit_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "airports_runways:\n";
    for (const auto& [icao, runways] : s.airports_runways) {
        out << "  " << icao << ":\n";
        for (const auto& rw : runways) {
            out << "    - " << rw << "\n";
        }
    }
    out << "\nimage:\n";
    out << "  height: " << s.image.height << "\n";
    out << "  width: " << s.image.width << "\n";
    out << "  fov_x: " << format_double(s.image.fov_x) << "\n";
    out << "  fov_y: " << format_double(s.image.fov_y) << "\n";
    out << "\nposes:\n";
    for (const auto& p : s.poses) {
        out << "  - uuid: " << p.uuid << "\n";
        out << "    airport: " << p.airport << "\n";
        out << "    runway: " << p.runway << "\n";
        out << "    pose:\n";
        for (double v : p.pose) {
            out << "      - " << format_double(v) << "\n";
        }
        out << "    time:\n";
        out << "      second: " << p.time.second << "\n";
        out << "      minute: " << p.time.minute << "\n";
        out << "      hour: " << p.time.hour << "\n";
        out << "      day: " << p.time.day << "\n";
        out << "      month: " << p.time.month << "\n";
        out << "      year: " << p.time.year << "\n";
        for (const auto& [key, node] : p.extra) {
            emit_extra(out, key, node, 4);
        }
    }
    if (!s.runways_database.empty()) {
        out << "\nrunways_database: " << s.runways_database << "\n";
    }
    out << "trajectory:\n";
    out << "  sample_number: " << s.trajectory_sample_number << "\n";
    for (const auto& [key, node] : s.extra) {
        emit_extra(out, key, node, 0);
    }
    return out.str();
}

bool semantically_equal(const Scenario& a, const Scenario& b) {
    const auto dump_extras = [](const std::vector<std::pair<std::string, YAML::Node>>& extras) {
        std::ostringstream out;
        for (const auto& [key, node] : extras) {
            emit_extra(out, key, node, 0);
        }
        return out.str();
    };
    if (a.airports_runways != b.airports_runways || !(a.image == b.image) ||
        a.runways_database != b.runways_database ||
        a.trajectory_sample_number != b.trajectory_sample_number ||
        a.poses.size() != b.poses.size() || dump_extras(a.extra) != dump_extras(b.extra)) {
        return false;
    }
    for (std::size_t i = 0; i < a.poses.size(); ++i) {
        const auto& pa = a.poses[i];
        const auto& pb = b.poses[i];
        if (pa.uuid != pb.uuid || pa.airport != pb.airport || pa.runway != pb.runway ||
            pa.pose != pb.pose || !(pa.time == pb.time) ||
            dump_extras(pa.extra) != dump_extras(pb.extra)) {
            return false;
        }
    }
    return true;
}

std::pair<GeodeticPoint, Attitude> pose_from_parameters(const PoseParameters& p,
                                                        const RunwayFrame& frame) {
    if (!(p.along_track_m < 0.0)) {
        throw ValidationError("pose construction requires along_track < 0 (approach side)");
    }
    const double d_along = p.along_track_m;
    const double d_cross = std::tan(radians(p.lateral_path_angle_deg)) * (-d_along);
    const double height =
        std::tan(radians(-p.vertical_path_angle_deg)) * (-d_along + kVrpOffsetM);

    const Eigen::Vector3d enu =
        d_along * frame.along + d_cross * frame.cross + height * Eigen::Vector3d::UnitZ();
    const GeodeticPoint position = offset_by_enu(frame.ltp, enu);
    const Attitude attitude{wrap_heading_deg(frame.true_heading_deg + p.relative_yaw_deg),
                            p.pitch_deg, p.roll_deg};
    return {position, attitude};
}

Scenario sample_scenario(const std::vector<RunwayGeometry>& runways, const SamplingSpec& spec,
                         const OddConfig& cfg, const ImageGeometry& image,
                         const std::string& runways_database_path) {
    if (runways.empty()) {
        throw ValidationError("sampling: empty runway list");
    }
    if (spec.poses_per_segment < 1) {
        throw ValidationError("sampling: poses_per_segment must be >= 1");
    }
    validate(cfg);

    Rng rng(spec.seed);
    Scenario s;
    s.image = image;
    s.runways_database = runways_database_path;
    s.trajectory_sample_number = 1;

    for (const auto& rw : runways) {
        auto it = std::find_if(s.airports_runways.begin(), s.airports_runways.end(),
                               [&](const auto& kv) { return kv.first == rw.airport_icao; });
        if (it == s.airports_runways.end()) {
            s.airports_runways.emplace_back(rw.airport_icao,
                                            std::vector<std::string>{rw.runway_id});
        } else if (std::find(it->second.begin(), it->second.end(), rw.runway_id) ==
                   it->second.end()) {
            it->second.push_back(rw.runway_id);
        }
    }

    for (const auto& rw : runways) {
        const RunwayFrame frame = build_runway_frame(rw);
        for (int seg = 0; seg < 3; ++seg) {
            const auto& segment = cfg.segments[static_cast<std::size_t>(seg)];
            for (int k = 0; k < spec.poses_per_segment; ++k) {
                // Forward construction is InOdd by design; the redraw loop
                // only guards against float round-trips grazing a closed
                // interval bound.
                GeodeticPoint position;
                Attitude attitude;
                bool accepted = false;
                for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
                    PoseParameters params;
                    params.along_track_m =
                        draw(spec.along_track, segment.along_track, rng, "along_track");
                    params.lateral_path_angle_deg = draw(spec.lateral, cfg.lateral, rng, "lateral");
                    params.vertical_path_angle_deg =
                        draw(spec.vertical, cfg.vertical, rng, "vertical");
                    params.relative_yaw_deg = draw(spec.yaw, segment.yaw, rng, "yaw");
                    params.pitch_deg = draw(spec.pitch, cfg.pitch, rng, "pitch");
                    params.roll_deg = draw(spec.roll, segment.roll, rng, "roll");
                    std::tie(position, attitude) = pose_from_parameters(params, frame);
                    accepted =
                        classify(pose_parameters(position, attitude, frame), cfg).label ==
                        OddLabel::InOdd;
                }
                if (!accepted) {
                    throw ValidationError("sampling: could not draw an InOdd pose for " +
                                          rw.airport_icao + "/" + rw.runway_id);
                }
                ScenarioPose pose;
                pose.uuid = make_uuid(rng);
                pose.airport = rw.airport_icao;
                pose.runway = rw.runway_id;
                pose.pose = {position.longitude_deg, position.latitude_deg, position.altitude_m,
                             attitude.heading_deg,   90.0 + attitude.pitch_deg,
                             attitude.roll_deg};
                pose.time = ScenarioTime{};
                s.poses.push_back(std::move(pose));
            }
        }
    }
    return s;
}

RunwayDatabase parse_runway_db(const std::string& json_text) {
    const json root = parse_json_checked(json_text, "runway database");
    if (!root.is_object()) {
        throw ValidationError("runway database: document must be a JSON object");
    }
    RunwayDatabase db;
    for (const auto& [icao, runways] : root.items()) {
        if (!runways.is_object()) {
            throw ValidationError("runway database: entry for " + icao + " must be an object");
        }
        for (const auto& [runway_id, body] : runways.items()) {
            const std::string where = icao + "/" + runway_id;
            if (!body.is_object() || !body.contains("corners") || !body.contains("has_piano")) {
                throw ValidationError("runway database: " + where +
                                      " must carry corners and has_piano");
            }
            const auto& corners = body["corners"];
            if (!corners.is_array() || corners.size() != 4) {
                throw ValidationError("runway database: " + where +
                                      " must list exactly 4 corners");
            }
            RunwayGeometry rw;
            rw.airport_icao = icao;
            rw.runway_id = runway_id;
            for (std::size_t i = 0; i < 4; ++i) {
                rw.corners[i] = corner_from_json(corners[i], where);
            }
            if (!body["has_piano"].is_boolean()) {
                throw ValidationError("runway database: " + where + ": has_piano must be a bool");
            }
            rw.has_piano = body["has_piano"].get<bool>();
            if (body.contains("source")) {
                if (!body["source"].is_string()) {
                    throw ValidationError("runway database: " + where + ": source must be a string");
                }
                rw.source = body["source"].get<std::string>();
            }
            validate(rw);
            db[icao][runway_id] = std::move(rw);
        }
    }
    return db;
}

RunwayDatabase load_runway_db(const std::string& path) {
    return parse_runway_db(read_file(path));
}

std::string emit_runway_db(const RunwayDatabase& db) {
    json root = json::object();
    for (const auto& [icao, runways] : db) {
        json airport = json::object();
        for (const auto& [runway_id, rw] : runways) {
            json corners = json::array();
            for (const auto& c : rw.corners) {
                corners.push_back({c.latitude_deg, c.longitude_deg, c.altitude_m});
            }
            airport[runway_id] = {
                {"corners", corners}, {"has_piano", rw.has_piano}, {"source", rw.source}};
        }
        root[icao] = std::move(airport);
    }
    return root.dump(2) + "\n";
}

std::vector<RunwayGeometry> flatten(const RunwayDatabase& db) {
    std::vector<RunwayGeometry> out;
    for (const auto& [icao, runways] : db) {
        for (const auto& [id, rw] : runways) {
            out.push_back(rw);
        }
    }
    return out;
}

SplitResult split_airports(const std::vector<std::string>& airports, double ratio,
                           std::uint64_t seed) {
    if (airports.empty()) {
        throw ValidationError("split: empty airport list");
    }
    if (!(ratio > 0.0) || !(ratio < 1.0)) {
        throw ValidationError("split: ratio must lie strictly between 0 and 1");
    }
    std::set<std::string> unique(airports.begin(), airports.end());
    if (unique.size() != airports.size()) {
        throw ValidationError("split: airport list contains duplicates");
    }

    std::vector<std::string> shuffled = airports;
    Rng rng(seed);
    shuffle(shuffled, rng);

    const auto n_train = static_cast<std::size_t>(
        std::lround(ratio * static_cast<double>(shuffled.size())));
    SplitResult out;
    out.seed = seed;
    out.ratio = ratio;
    out.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::string emit_split(const SplitResult& split) {
    const json j = {{"seed", split.seed},
                    {"ratio", split.ratio},
                    {"train", split.train},
                    {"test", split.test}};
    return j.dump(2) + "\n";
}

}  // namespace rodd
