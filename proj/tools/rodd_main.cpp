// rodd: approach-cone ODD toolkit command line.
//
// Subcommands: sample, label, calibrate, eval, split, dump-odd-config.
// Exit codes: 0 success, 1 validation error, 2 I/O error. Diagnostics go to
// stderr only; primary output goes to the requested file (or stdout).

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rodd/approach_odd.hpp"
#include "rodd/errors.hpp"
#include "rodd/labeling.hpp"
#include "rodd/metrics.hpp"
#include "rodd/scenario.hpp"
#include "rodd/util.hpp"
#include "rodd/version.hpp"

namespace {

using nlohmann::json;

// Every file-producing run leaves a <out>.run.json next to its output:
// command, effective config, seed and input hashes. Outputs are pure
// functions of those fields; the timestamp is informational.
struct RunManifest {
    std::string command;
    json config = json::object();
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;

    void add_input(const std::string& path) {
        input_hashes[path] = rodd::hex64(rodd::fnv1a64(rodd::read_file(path)));
    }

    void write_next_to(const std::string& out_path) const {
        const json j = {{"command", command},
                        {"config", config},
                        {"seed", seed},
                        {"inputs", input_hashes},
                        {"tool_version", rodd::kToolVersion},
                        {"created_utc", rodd::iso8601_utc_now()}};
        rodd::write_file(out_path + ".run.json", j.dump(2) + "\n");
    }
};

rodd::OddConfig load_odd_config_or_default(const std::string& path) {
    if (path.empty()) {
        return rodd::OddConfig{};
    }
    return rodd::parse_odd_config(rodd::read_file(path));
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// Resolves the scenario's runways_database path relative to the scenario
// file location, matching how scenario files reference their databases.
std::string resolve_db_path(const std::string& scenario_path, const std::string& db_field) {
    const std::filesystem::path db(db_field);
    if (db.is_absolute()) {
        return db.string();
    }
    return (std::filesystem::path(scenario_path).parent_path() / db).lexically_normal().string();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw rodd::ValidationError("corner CSV: missing required column \"" + name + "\"");
    }
};

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream lines(text);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) {
        throw rodd::ValidationError("corner CSV: file is empty");
    }
    return table;
}

double csv_double(const std::vector<std::string>& row, std::size_t col, std::size_t line_no) {
    if (col >= row.size()) {
        throw rodd::ValidationError("corner CSV: row " + std::to_string(line_no) +
                                    " has too few fields");
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(row[col], &used);
        if (used != row[col].size()) {
            throw std::invalid_argument(row[col]);
        }
        return v;
    } catch (const std::exception&) {
        throw rodd::ValidationError("corner CSV: row " + std::to_string(line_no) +
                                    ": not a number: \"" + row[col] + "\"");
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Approach-cone ODD toolkit: scenario generation, runway labelling,\n"
                 "calibration back-projection and ODD-aware detection metrics."};
    app.require_subcommand(1);
    std::function<void()> action;

    // ---- sample ----------------------------------------------------------
    auto* sample = app.add_subcommand("sample", "Generate an ODD-consistent pose scenario");
    {
        struct Opts {
            std::string runway_db, airports, odd_config, out;
            int per_segment = 10;
            std::uint64_t seed = 0;
            rodd::ImageGeometry image;
        };
        auto opts = std::make_shared<Opts>();
        sample->add_option("--runway-db", opts->runway_db, "Runway database (JSON)")->required();
        sample->add_option("--airports", opts->airports,
                           "Comma-separated ICAO filter (default: all airports)");
        sample->add_option("--per-segment", opts->per_segment, "Poses per ODD segment")
            ->capture_default_str();
        sample->add_option("--seed", opts->seed, "Sampling seed")->capture_default_str();
        sample->add_option("--width", opts->image.width)->capture_default_str();
        sample->add_option("--height", opts->image.height)->capture_default_str();
        sample->add_option("--fov-x", opts->image.fov_x)->capture_default_str();
        sample->add_option("--fov-y", opts->image.fov_y)->capture_default_str();
        sample->add_option("--odd-config", opts->odd_config, "ODD config (YAML)");
        sample->add_option("--out", opts->out, "Output scenario path")->required();
        sample->callback([opts, &action] {
            action = [opts] {
                const auto db = rodd::load_runway_db(opts->runway_db);
                std::vector<rodd::RunwayGeometry> runways;
                if (opts->airports.empty()) {
                    runways = rodd::flatten(db);
                } else {
                    for (const auto& icao : split_csv_list(opts->airports)) {
                        const auto it = db.find(icao);
                        if (it == db.end()) {
                            throw rodd::ValidationError("unknown airport ICAO \"" + icao + "\"");
                        }
                        for (const auto& [id, rw] : it->second) {
                            runways.push_back(rw);
                        }
                    }
                }
                const rodd::OddConfig cfg = load_odd_config_or_default(opts->odd_config);
                rodd::SamplingSpec spec;
                spec.poses_per_segment = opts->per_segment;
                spec.seed = opts->seed;
                const rodd::Scenario scenario = rodd::sample_scenario(
                    runways, spec, cfg, opts->image, opts->runway_db);
                rodd::write_file(opts->out, rodd::emit_scenario(scenario));

                RunManifest manifest;
                manifest.command = "sample";
                manifest.seed = opts->seed;
                manifest.config = {{"airports", opts->airports},
                                   {"per_segment", opts->per_segment},
                                   {"image", {{"width", opts->image.width},
                                              {"height", opts->image.height},
                                              {"fov_x", opts->image.fov_x},
                                              {"fov_y", opts->image.fov_y}}},
                                   {"odd_config_hash", rodd::hex64(rodd::odd_config_hash(cfg))}};
                manifest.add_input(opts->runway_db);
                if (!opts->odd_config.empty()) {
                    manifest.add_input(opts->odd_config);
                }
                manifest.write_next_to(opts->out);
            };
        });
    }

    // ---- label -----------------------------------------------------------
    auto* label = app.add_subcommand("label", "Label every scenario pose against a runway database");
    {
        struct Opts {
            std::string scenario, runway_db, odd_config, out;
            rodd::LabelConfig lc;
            bool allow_no_piano = false;
        };
        auto opts = std::make_shared<Opts>();
        label->add_option("--scenario", opts->scenario, "Scenario file (YAML)")->required();
        label->add_option("--runway-db", opts->runway_db,
                          "Runway database; defaults to the scenario's runways_database");
        label->add_option("--odd-config", opts->odd_config, "ODD config (YAML)");
        label->add_option("--source-tag", opts->lc.source_tag,
                          "Data-source tag; selects the per-source database and suffixes image ids");
        label->add_option("--min-visible-fraction", opts->lc.min_visible_fraction)
            ->capture_default_str();
        label->add_option("--min-bbox-area", opts->lc.min_bbox_area_px)->capture_default_str();
        label->add_flag("--allow-no-piano", opts->allow_no_piano,
                        "Also label runways without piano markings");
        label->add_option("--out", opts->out, "Output manifest path")->required();
        label->callback([opts, &action] {
            action = [opts] {
                const rodd::Scenario scenario = rodd::load_scenario(opts->scenario);
                std::string db_path = opts->runway_db;
                if (db_path.empty()) {
                    if (scenario.runways_database.empty()) {
                        throw rodd::ValidationError(
                            "no runway database: pass --runway-db or set runways_database");
                    }
                    db_path = resolve_db_path(opts->scenario, scenario.runways_database);
                }
                const auto db = rodd::load_runway_db(db_path);
                const rodd::OddConfig cfg = load_odd_config_or_default(opts->odd_config);
                rodd::LabelConfig lc = opts->lc;
                lc.require_piano = !opts->allow_no_piano;
                const auto manifest = rodd::label_scenario(scenario, db, cfg, lc);
                rodd::write_file(opts->out, rodd::emit_manifest(manifest));

                RunManifest run;
                run.command = "label";
                run.config = {{"source_tag", lc.source_tag},
                              {"min_visible_fraction", lc.min_visible_fraction},
                              {"min_bbox_area", lc.min_bbox_area_px},
                              {"require_piano", lc.require_piano},
                              {"odd_config_hash", rodd::hex64(rodd::odd_config_hash(cfg))}};
                run.add_input(opts->scenario);
                run.add_input(db_path);
                if (!opts->odd_config.empty()) {
                    run.add_input(opts->odd_config);
                }
                run.write_next_to(opts->out);
            };
        });
    }

    // ---- calibrate -------------------------------------------------------
    auto* calibrate = app.add_subcommand(
        "calibrate", "Back-project detected threshold corners into a corrected database fragment");
    {
        struct Opts {
            std::string corners, runway_db, source_tag, out;
            double agl = 400.0;
            rodd::ImageGeometry image;
        };
        auto opts = std::make_shared<Opts>();
        calibrate->add_option("--corners", opts->corners,
                              "CSV: image_id,u_left,v_left,u_right,v_right,ground_alt")
            ->required();
        calibrate->add_option("--runway-db", opts->runway_db, "Source runway database (JSON)")
            ->required();
        calibrate->add_option("--agl", opts->agl, "Acquisition altitude above the threshold (m)")
            ->capture_default_str();
        calibrate->add_option("--width", opts->image.width)->capture_default_str();
        calibrate->add_option("--height", opts->image.height)->capture_default_str();
        calibrate->add_option("--fov-x", opts->image.fov_x)->capture_default_str();
        calibrate->add_option("--fov-y", opts->image.fov_y)->capture_default_str();
        calibrate->add_option("--source-tag", opts->source_tag,
                              "Source tag stamped on corrected entries");
        calibrate->add_option("--out", opts->out, "Output database fragment path")->required();
        calibrate->callback([opts, &action] {
            action = [opts] {
                const auto db = rodd::load_runway_db(opts->runway_db);
                const rodd::CameraModel cam = opts->image.camera();
                rodd::validate(cam);
                const CsvTable table = parse_csv(rodd::read_file(opts->corners));
                const std::size_t col_id = table.column("image_id");
                const std::size_t col_ul = table.column("u_left");
                const std::size_t col_vl = table.column("v_left");
                const std::size_t col_ur = table.column("u_right");
                const std::size_t col_vr = table.column("v_right");
                const std::size_t col_alt = table.column("ground_alt");

                rodd::RunwayDatabase corrected;
                for (std::size_t r = 0; r < table.rows.size(); ++r) {
                    const auto& row = table.rows[r];
                    const std::size_t line_no = r + 2;
                    if (col_id >= row.size()) {
                        throw rodd::ValidationError("corner CSV: row " + std::to_string(line_no) +
                                                    " has too few fields");
                    }
                    const std::string& id = row[col_id];
                    if (id.size() < 6 || id[4] != '_') {
                        throw rodd::ValidationError("corner CSV: image_id \"" + id +
                                                    "\" must be ICAO_RUNWAY");
                    }
                    const std::string icao = id.substr(0, 4);
                    const std::string runway = id.substr(5);
                    const auto airport_it = db.find(icao);
                    if (airport_it == db.end() ||
                        airport_it->second.find(runway) == airport_it->second.end()) {
                        throw rodd::ValidationError("corner CSV: unknown runway " + icao + "/" +
                                                    runway);
                    }
                    const rodd::RunwayGeometry& rw = airport_it->second.at(runway);
                    const rodd::RunwayFrame frame = rodd::build_runway_frame(rw);
                    const rodd::CameraPose pose = rodd::nadir_calibration_pose(
                        frame.ltp, frame.true_heading_deg, opts->agl);
                    const double ground_alt = csv_double(row, col_alt, line_no);

                    rodd::RunwayGeometry out_rw = rw;
                    out_rw.corners[0] = rodd::backproject_to_ground(
                        {csv_double(row, col_ul, line_no), csv_double(row, col_vl, line_no)}, cam,
                        pose, ground_alt);
                    out_rw.corners[1] = rodd::backproject_to_ground(
                        {csv_double(row, col_ur, line_no), csv_double(row, col_vr, line_no)}, cam,
                        pose, ground_alt);
                    out_rw.source = opts->source_tag;
                    corrected[icao][runway] = std::move(out_rw);
                }
                rodd::write_file(opts->out, rodd::emit_runway_db(corrected));

                RunManifest run;
                run.command = "calibrate";
                run.config = {{"agl", opts->agl},
                              {"image", {{"width", opts->image.width},
                                         {"height", opts->image.height},
                                         {"fov_x", opts->image.fov_x},
                                         {"fov_y", opts->image.fov_y}}},
                              {"source_tag", opts->source_tag}};
                run.add_input(opts->corners);
                run.add_input(opts->runway_db);
                run.write_next_to(opts->out);
            };
        });
    }

    // ---- eval ------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Compute mAP / e-mAP report from a manifest and predictions");
    {
        struct Opts {
            std::string manifest, predictions, out, crossbar, crossbar_out;
            rodd::EvalConfig cfg;
        };
        auto opts = std::make_shared<Opts>();
        eval->add_option("--manifest", opts->manifest, "Dataset manifest (JSON)");
        eval->add_option("--predictions", opts->predictions, "Predictions file (JSON)");
        eval->add_option("--score-threshold", opts->cfg.score_threshold)->capture_default_str();
        eval->add_option("--exhaustive-limit", opts->cfg.exhaustive_limit)->capture_default_str();
        eval->add_option("--out", opts->out, "Output report path");
        eval->add_option("--crossbar", opts->crossbar,
                         "JSON list of {tag, source, manifest, predictions} cells");
        eval->add_option("--crossbar-out", opts->crossbar_out, "Crossbar CSV path prefix");
        eval->callback([opts, &action] {
            action = [opts] {
                const auto evaluate_pair = [&](const std::string& manifest_path,
                                               const std::string& predictions_path) {
                    const auto manifest = rodd::load_manifest(manifest_path);
                    const auto gt = rodd::ground_truth_from_manifest(manifest);
                    const auto dets = rodd::load_predictions(predictions_path);
                    return rodd::build_report(gt, dets, opts->cfg);
                };

                if (!opts->crossbar.empty()) {
                    if (opts->crossbar_out.empty()) {
                        throw rodd::ValidationError("--crossbar requires --crossbar-out");
                    }
                    json cells_spec;
                    try {
                        cells_spec = json::parse(rodd::read_file(opts->crossbar));
                    } catch (const json::parse_error& e) {
                        throw rodd::ValidationError(std::string("crossbar spec: ") + e.what());
                    }
                    if (!cells_spec.is_array()) {
                        throw rodd::ValidationError("crossbar spec must be a JSON array");
                    }
                    std::map<std::pair<std::string, std::string>, rodd::EvalReport> cells;
                    for (const auto& cell : cells_spec) {
                        const auto tag = cell.at("tag").get<std::string>();
                        const auto source = cell.at("source").get<std::string>();
                        cells[{tag, source}] = evaluate_pair(
                            cell.at("manifest").get<std::string>(),
                            cell.at("predictions").get<std::string>());
                    }
                    for (const auto& [family, csv] : rodd::crossbar_csv(cells)) {
                        rodd::write_file(opts->crossbar_out + "_" + family + ".csv", csv);
                    }
                }

                if (!opts->manifest.empty() || !opts->predictions.empty()) {
                    if (opts->manifest.empty() || opts->predictions.empty() || opts->out.empty()) {
                        throw rodd::ValidationError(
                            "eval needs --manifest, --predictions and --out");
                    }
                    const rodd::EvalReport report =
                        evaluate_pair(opts->manifest, opts->predictions);
                    rodd::write_file(opts->out, rodd::emit_report(report));

                    RunManifest run;
                    run.command = "eval";
                    run.config = {{"score_threshold", opts->cfg.score_threshold},
                                  {"iou_thresholds", opts->cfg.iou_thresholds},
                                  {"exhaustive_limit", opts->cfg.exhaustive_limit}};
                    run.add_input(opts->manifest);
                    run.add_input(opts->predictions);
                    run.write_next_to(opts->out);
                } else if (opts->crossbar.empty()) {
                    throw rodd::ValidationError(
                        "eval needs --manifest/--predictions or --crossbar");
                }
            };
        });
    }

    // ---- split -----------------------------------------------------------
    auto* split = app.add_subcommand("split", "Leakage-free train/test split at airport granularity");
    {
        struct Opts {
            std::string airports_file, out;
            double ratio = 0.5;
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<Opts>();
        split->add_option("--airports-file", opts->airports_file,
                          "Text file with one airport ICAO per line")
            ->required();
        split->add_option("--ratio", opts->ratio, "Training fraction")->capture_default_str();
        split->add_option("--seed", opts->seed, "Shuffle seed")->capture_default_str();
        split->add_option("--out", opts->out, "Output split manifest path")->required();
        split->callback([opts, &action] {
            action = [opts] {
                std::vector<std::string> airports;
                std::istringstream lines(rodd::read_file(opts->airports_file));
                std::string line;
                while (std::getline(lines, line)) {
                    if (!line.empty() && line.back() == '\r') {
                        line.pop_back();
                    }
                    if (!line.empty()) {
                        airports.push_back(line);
                    }
                }
                const rodd::SplitResult result =
                    rodd::split_airports(airports, opts->ratio, opts->seed);
                rodd::write_file(opts->out, rodd::emit_split(result));

                RunManifest run;
                run.command = "split";
                run.seed = opts->seed;
                run.config = {{"ratio", opts->ratio}};
                run.add_input(opts->airports_file);
                run.write_next_to(opts->out);
            };
        });
    }

    // ---- dump-odd-config -------------------------------------------------
    auto* dump = app.add_subcommand("dump-odd-config", "Print the built-in ODD thresholds as YAML");
    {
        auto out_path = std::make_shared<std::string>();
        dump->add_option("--out", *out_path, "Write to a file instead of stdout");
        dump->callback([out_path, &action] {
            action = [out_path] {
                const std::string text = rodd::emit_odd_config(rodd::OddConfig{});
                if (out_path->empty()) {
                    std::cout << text;
                } else {
                    rodd::write_file(*out_path, text);
                }
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    action();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const rodd::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const rodd::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
