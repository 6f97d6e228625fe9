#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rodd/metrics.hpp"
#include "rodd/random.hpp"

using namespace rodd;

namespace {

PixelBox box(double cx, double cy, double w = 10.0, double h = 10.0) { return {cx, cy, w, h}; }

Detection det(const std::string& image, const PixelBox& b, double score) {
    return {image, b, score};
}

// Exhaustive max-cardinality assignment, the oracle for the greedy matcher.
int best_assignment(const std::vector<PixelBox>& gts, const std::vector<Detection>& dets,
                    double tau, std::size_t di, std::vector<bool>& used) {
    if (di == dets.size()) {
        return 0;
    }
    int best = best_assignment(gts, dets, tau, di + 1, used);
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (!used[gi] && iou(dets[di].bbox, gts[gi]) >= tau) {
            used[gi] = true;
            best = std::max(best, 1 + best_assignment(gts, dets, tau, di + 1, used));
            used[gi] = false;
        }
    }
    return best;
}

struct Instance {
    GroundTruthSet gt;
    std::vector<Detection> dets;
};

// Ground truths on a coarse grid (pairwise IoU zero, and no detection can
// clear a 0.5 IoU with two of them); detections jitter around some of them
// plus pure false positives far off the grid.
Instance spaced_instance(Rng& rng, int images, int max_in, int max_ext, double cover_prob) {
    Instance inst;
    for (int img = 0; img < images; ++img) {
        const std::string id = "img" + std::to_string(img);
        auto& boxes = inst.gt.images[id];
        const int n_in = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_in)));
        const int n_ext = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_ext + 1)));
        int slot = 0;
        for (int i = 0; i < n_in + n_ext; ++i, ++slot) {
            const double cx = 40.0 + 80.0 * slot;
            const double cy = 40.0 + 80.0 * static_cast<double>(img % 3);
            boxes.push_back({box(cx, cy, 20.0, 20.0), i >= n_in});
            if (rng.uniform01() < cover_prob) {
                // Jitter keeps IoU far above any threshold in use.
                inst.dets.push_back(det(id,
                                        box(cx + rng.uniform(-0.5, 0.5),
                                            cy + rng.uniform(-0.5, 0.5), 20.0, 20.0),
                                        rng.uniform(0.55, 1.0)));
            }
        }
        const int n_fp = static_cast<int>(rng.below(3));
        for (int i = 0; i < n_fp; ++i, ++slot) {
            inst.dets.push_back(det(id, box(40.0 + 80.0 * slot, 460.0, 20.0, 20.0),
                                    rng.uniform(0.55, 1.0)));
        }
    }
    return inst;
}

}  // namespace

TEST_CASE("iou basics") {
    CHECK(iou(box(50, 50), box(50, 50)) == doctest::Approx(1.0));
    CHECK(iou(box(50, 50), box(500, 500)) == doctest::Approx(0.0));
    // Two 10x10 boxes offset by 5 in u: 50 / 150.
    CHECK(iou(box(50, 50), box(55, 50)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("greedy matching") {
    SUBCASE("single pair") {
        const MatchResult m = match({box(50, 50)}, {det("a", box(51, 50), 0.9)}, 0.5);
        CHECK(m.tp_count == 1);
        CHECK(m.det_to_gt == std::vector<int>{0});
    }

    SUBCASE("two detections on one ground truth") {
        const MatchResult m =
            match({box(50, 50)}, {det("a", box(50, 50), 0.6), det("a", box(51, 50), 0.9)}, 0.5);
        CHECK(m.tp_count == 1);
        // The higher-scored detection wins even though it arrives second.
        CHECK(m.det_to_gt[1] == 0);
        CHECK(m.det_to_gt[0] == -1);
    }

    SUBCASE("iou ties go to the earlier ground truth") {
        const MatchResult m =
            match({box(50, 50), box(58, 50)}, {det("a", box(54, 50), 0.9)}, 0.1);
        CHECK(m.det_to_gt[0] == 0);
    }

    SUBCASE("documented greedy gap fixture") {
        // d1 prefers g1 (higher IoU), starving d2; the optimal assignment
        // matches both.
        const std::vector<PixelBox> gts{box(50, 50, 20, 20), box(62, 50, 20, 20)};
        const std::vector<Detection> dets{det("a", box(56, 50, 20, 20), 0.9),
                                          det("a", box(50, 50, 20, 20), 0.8)};
        const double tau = 0.3;
        REQUIRE(iou(dets[0].bbox, gts[0]) > iou(dets[0].bbox, gts[1]));
        REQUIRE(iou(dets[0].bbox, gts[1]) >= tau);
        REQUIRE(iou(dets[1].bbox, gts[0]) >= tau);
        REQUIRE(iou(dets[1].bbox, gts[1]) < tau);

        const MatchResult m = match(gts, dets, tau);
        CHECK(m.tp_count == 1);
        std::vector<bool> used(gts.size(), false);
        CHECK(best_assignment(gts, dets, tau, 0, used) == 2);
    }

    SUBCASE("greedy never exceeds the assignment oracle") {
        Rng rng(8);
        for (int i = 0; i < 500; ++i) {
            std::vector<PixelBox> gts;
            const int n_gt = 1 + static_cast<int>(rng.below(4));
            for (int g = 0; g < n_gt; ++g) {
                gts.push_back(box(rng.uniform(20.0, 120.0), rng.uniform(20.0, 120.0), 24.0, 24.0));
            }
            std::vector<Detection> dets;
            const int n_det = static_cast<int>(rng.below(5));
            for (int d = 0; d < n_det; ++d) {
                dets.push_back(det("a",
                                   box(rng.uniform(20.0, 120.0), rng.uniform(20.0, 120.0), 24.0, 24.0),
                                   rng.uniform01()));
            }
            const double tau = rng.uniform(0.2, 0.8);
            const MatchResult m = match(gts, dets, tau);
            std::vector<bool> used(gts.size(), false);
            const int optimal = best_assignment(gts, dets, tau, 0, used);
            CHECK(m.tp_count <= optimal);
            // Greedy maximal matchings reach at least half the optimum.
            CHECK(2 * m.tp_count >= optimal);
        }
    }
}

TEST_CASE("average precision fixtures") {
    SUBCASE("perfect detector") {
        std::vector<ApImage> images(2);
        images[0] = {"a", {box(50, 50), box(120, 50)}, {det("a", box(50, 50), 0.9), det("a", box(120, 50), 0.8)}};
        images[1] = {"b", {box(60, 60)}, {det("b", box(60, 60), 0.7)}};
        CHECK(std::abs(average_precision(images, 0.5) - 1.0) < 1e-12);
    }

    SUBCASE("one of two ground truths found") {
        const std::vector<ApImage> images{
            {"a", {box(50, 50), box(120, 50)}, {det("a", box(50, 50), 0.9)}}};
        CHECK(std::abs(average_precision(images, 0.5) - 0.5) < 1e-12);
    }

    SUBCASE("TP, FP, TP ranking gives five sixths") {
        const std::vector<ApImage> images{{"a",
                                           {box(50, 50), box(120, 50)},
                                           {det("a", box(50, 50), 0.9), det("a", box(300, 300), 0.8),
                                            det("a", box(120, 50), 0.7)}}};
        CHECK(std::abs(average_precision(images, 0.5) - 5.0 / 6.0) < 1e-12);
    }

    SUBCASE("zero ground truth is an error, not zero") {
        const std::vector<ApImage> images{{"a", {}, {det("a", box(50, 50), 0.9)}}};
        CHECK_THROWS_AS(average_precision(images, 0.5), ValidationError);
    }

    SUBCASE("no detections scores zero") {
        const std::vector<ApImage> images{{"a", {box(50, 50)}, {}}};
        CHECK(average_precision(images, 0.5) == 0.0);
    }
}

TEST_CASE("average precision is invariant under monotone score rescaling") {
    Rng rng(15);
    for (int i = 0; i < 100; ++i) {
        Instance inst = spaced_instance(rng, 2, 3, 2, 0.7);
        const DetectionMap grouped = group_detections(inst.gt, inst.dets);
        std::vector<ApImage> view;
        for (const auto& [id, boxes] : inst.gt.images) {
            ApImage img;
            img.image_id = id;
            for (const auto& b : boxes) {
                img.gts.push_back(b.bbox);
            }
            if (grouped.count(id)) {
                img.dets = grouped.at(id);
            }
            view.push_back(img);
        }
        const double base = average_precision(view, 0.5);

        const double p = rng.uniform(0.3, 3.0);
        const double gain = rng.uniform(0.2, 5.0);
        for (auto& img : view) {
            for (auto& d : img.dets) {
                d.score = std::pow(d.score, p) * gain / (gain + 1.0);  // strictly monotone
            }
        }
        CHECK(average_precision(view, 0.5) == base);
    }
}

TEST_CASE("appending trailing detections is prefix-stable") {
    std::vector<ApImage> images{{"a", {box(50, 50), box(120, 50)}, {det("a", box(50, 50), 0.9)}}};
    const double base = average_precision(images, 0.5);

    SUBCASE("a lowest-scored TP never decreases AP") {
        images[0].dets.push_back(det("a", box(120, 50), 0.05));
        CHECK(average_precision(images, 0.5) >= base);
    }

    SUBCASE("a lowest-scored FP leaves AP unchanged") {
        images[0].dets.push_back(det("a", box(400, 400), 0.05));
        CHECK(average_precision(images, 0.5) == base);
    }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
        std::vector<ApImage> images(1);
        images[0].image_id = "a";
        const int n_gt = 1 + static_cast<int>(rng.below(4));
        for (int g = 0; g < n_gt; ++g) {
            images[0].gts.push_back(
                box(rng.uniform(30.0, 200.0), rng.uniform(30.0, 200.0), 26.0, 26.0));
        }
        const int n_det = static_cast<int>(rng.below(6));
        for (int d = 0; d < n_det; ++d) {
            images[0].dets.push_back(det("a",
                                         box(rng.uniform(30.0, 200.0), rng.uniform(30.0, 200.0), 26.0, 26.0),
                                         rng.uniform01()));
        }
        double previous = 2.0;
        for (double tau = 0.3; tau < 0.96; tau += 0.05) {
            const double ap = average_precision(images, tau);
            CHECK(ap <= previous + 1e-12);
            previous = ap;
        }
    }
}

TEST_CASE("map_suite") {
    GroundTruthSet gt;
    gt.images["a"] = {{box(50, 50), false}, {box(120, 50), false}};

    SUBCASE("perfect detections give ones everywhere") {
        const std::vector<Detection> dets{det("a", box(50, 50), 0.9), det("a", box(120, 50), 0.8)};
        const MapTriple t = map_suite(gt, false, group_detections(gt, dets), EvalConfig{});
        CHECK(t.map == doctest::Approx(1.0));
        CHECK(t.map50 == doctest::Approx(1.0));
        CHECK(t.map75 == doctest::Approx(1.0));
    }

    SUBCASE("empty detections give zeros") {
        const MapTriple t = map_suite(gt, false, {}, EvalConfig{});
        CHECK(t.map == 0.0);
        CHECK(t.map50 == 0.0);
        CHECK(t.map75 == 0.0);
    }

    SUBCASE("unknown image ids are rejected") {
        const std::vector<Detection> dets{det("nope", box(50, 50), 0.9)};
        CHECK_THROWS_AS(group_detections(gt, dets), ValidationError);
    }
}

TEST_CASE("e_map_exact on hand-enumerable cases") {
    const EvalConfig cfg;

    SUBCASE("no extended pool reduces to plain mAP") {
        GroundTruthSet gt;
        gt.images["a"] = {{box(50, 50), false}};
        const std::vector<Detection> dets{det("a", box(50, 50), 0.9)};
        const DetectionMap grouped = group_detections(gt, dets);
        const EMapResult r = e_map_exact(gt, grouped, 0.5);
        CHECK(r.value == doctest::Approx(1.0));
        CHECK(r.chosen.empty());
    }

    SUBCASE("a covered extended box joins the subset") {
        GroundTruthSet gt;
        gt.images["a"] = {{box(50, 50), false}, {box(150, 50), true}};
        // The extended cover outranks the In-ODD one, so excluding it costs
        // precision at the top: AP(empty) = 0.5, AP({ext}) = 1.
        const std::vector<Detection> dets{det("a", box(50, 50), 0.9),
                                          det("a", box(150, 50), 0.95)};
        const DetectionMap grouped = group_detections(gt, dets);
        CHECK(map_suite(gt, false, grouped, cfg).map50 == doctest::Approx(0.5));
        const EMapResult r = e_map_exact(gt, grouped, 0.5);
        CHECK(r.value == doctest::Approx(1.0));
        REQUIRE(r.chosen.size() == 1);
        CHECK(r.chosen[0].image_id == "a");
        CHECK(r.chosen[0].gt_index == 1);
    }

    SUBCASE("an uncovered extended box stays excluded") {
        GroundTruthSet gt;
        gt.images["a"] = {{box(50, 50), false}, {box(150, 50), true}};
        const std::vector<Detection> dets{det("a", box(50, 50), 0.9)};
        const DetectionMap grouped = group_detections(gt, dets);
        const EMapResult r = e_map_exact(gt, grouped, 0.5);
        CHECK(r.value == doctest::Approx(1.0));
        CHECK(r.chosen.empty());
    }

    SUBCASE("pool above the limit is refused") {
        GroundTruthSet gt;
        auto& boxes = gt.images["a"];
        boxes.push_back({box(40, 40), false});
        for (int i = 0; i < 25; ++i) {
            boxes.push_back({box(40.0 + 30.0 * (i + 1), 40.0), true});
        }
        CHECK_THROWS_AS(e_map_exact(gt, {}, 0.5, 20), ValidationError);
        CHECK_NOTHROW(e_map_greedy(gt, {}, 0.5));
    }
}

TEST_CASE("e-mAP dominance and greedy agreement") {
    Rng rng(33);

    SUBCASE("exact dominates the In-ODD AP and the greedy value") {
        for (int i = 0; i < 800; ++i) {
            const Instance inst = spaced_instance(rng, 2, 2, 2, 0.6);
            const DetectionMap grouped = group_detections(inst.gt, inst.dets);
            const double tau = 0.5;

            const MapTriple in_only = map_suite(inst.gt, false, grouped, EvalConfig{});
            const EMapResult exact = e_map_exact(inst.gt, grouped, tau);
            const EMapResult greedy = e_map_greedy(inst.gt, grouped, tau);
            CHECK(exact.value >= in_only.map50 - 1e-12);
            CHECK(exact.value >= greedy.value - 1e-12);
            CHECK(greedy.value >= in_only.map50 - 1e-12);
        }
    }

    SUBCASE("greedy equals exact on spaced instances") {
        for (int i = 0; i < 500; ++i) {
            const Instance inst = spaced_instance(rng, 2, 3, 3, 0.5);
            const DetectionMap grouped = group_detections(inst.gt, inst.dets);
            const double tau = 0.5;
            const EMapResult exact = e_map_exact(inst.gt, grouped, tau);
            const EMapResult greedy = e_map_greedy(inst.gt, grouped, tau);
            CHECK(std::abs(exact.value - greedy.value) < 1e-12);
        }
    }

    SUBCASE("empty subset whenever nothing matches an extended box") {
        for (int i = 0; i < 300; ++i) {
            Instance inst = spaced_instance(rng, 1, 2, 2, 0.0);  // no covering dets at all
            // Give the In boxes their detections back so AP is meaningful.
            for (const auto& [id, boxes] : inst.gt.images) {
                for (const auto& b : boxes) {
                    if (!b.extended && rng.uniform01() < 0.8) {
                        inst.dets.push_back(det(id, b.bbox, rng.uniform(0.55, 1.0)));
                    }
                }
            }
            const DetectionMap grouped = group_detections(inst.gt, inst.dets);
            const EMapResult exact = e_map_exact(inst.gt, grouped, 0.5);
            const EMapResult greedy = e_map_greedy(inst.gt, grouped, 0.5);
            CHECK(exact.chosen.empty());
            CHECK(greedy.chosen.empty());
        }
    }
}

TEST_CASE("build_report shapes the three metric rows") {
    GroundTruthSet gt;
    gt.images["a"] = {{box(50, 50), false}, {box(150, 50), false}, {box(250, 50), true}};
    gt.images["b"] = {{box(60, 60), false}, {box(160, 60), true}};

    SUBCASE("perfect detector yields nine ones") {
        std::vector<Detection> dets;
        double score = 0.99;
        for (const auto& [id, boxes] : gt.images) {
            for (const auto& b : boxes) {
                dets.push_back(det(id, b.bbox, score));
                score -= 0.01;
            }
        }
        const EvalReport report = build_report(gt, dets, EvalConfig{});
        for (const EvalRow* row : {&report.map_in, &report.map_combined, &report.e_map}) {
            CHECK(row->values.map == doctest::Approx(1.0));
            CHECK(row->values.map50 == doctest::Approx(1.0));
            CHECK(row->values.map75 == doctest::Approx(1.0));
        }
        CHECK(report.map_in.gt_count_used == 3);
        CHECK(report.map_combined.gt_count_used == 5);
        CHECK(report.e_map.gt_count_used == 5);
        CHECK(report.map_in.detection_count == 5);
    }

    SUBCASE("the e-mAP row sits between the bounds") {
        // Cover all In boxes and one of the two extended ones.
        std::vector<Detection> dets{det("a", box(50, 50), 0.99), det("a", box(150, 50), 0.98),
                                    det("b", box(60, 60), 0.97), det("a", box(250, 50), 0.6)};
        const EvalReport report = build_report(gt, dets, EvalConfig{});
        CHECK(report.map_in.gt_count_used == 3);
        CHECK(report.map_combined.gt_count_used == 5);
        CHECK(report.e_map.gt_count_used == 4);
        CHECK(report.e_map.values.map >= report.map_in.values.map - 1e-12);
        CHECK(report.e_map.values.map >= report.map_combined.values.map - 1e-12);
    }

    SUBCASE("score threshold filters detections") {
        const std::vector<Detection> dets{det("a", box(50, 50), 0.99),
                                          det("a", box(150, 50), 0.4)};
        const EvalReport report = build_report(gt, dets, EvalConfig{});
        CHECK(report.map_in.detection_count == 1);
    }

    SUBCASE("report emission is deterministic and order independent") {
        std::vector<Detection> dets{det("a", box(50, 50), 0.99), det("b", box(60, 60), 0.97),
                                    det("a", box(150, 50), 0.98)};
        const std::string once = emit_report(build_report(gt, dets, EvalConfig{}));
        std::reverse(dets.begin(), dets.end());
        const std::string twice = emit_report(build_report(gt, dets, EvalConfig{}));
        CHECK(once == twice);
    }

    SUBCASE("invalid scores are rejected") {
        const std::vector<Detection> dets{det("a", box(50, 50), 1.5)};
        CHECK_THROWS_AS(build_report(gt, dets, EvalConfig{}), ValidationError);
    }
}

TEST_CASE("crossbar CSV assembly") {
    GroundTruthSet gt;
    gt.images["a"] = {{box(50, 50), false}};
    const std::vector<Detection> dets{det("a", box(50, 50), 0.9)};
    const EvalReport perfect = build_report(gt, dets, EvalConfig{});
    const EvalReport empty_dets = build_report(gt, {}, EvalConfig{});

    SUBCASE("single cell passthrough") {
        std::map<std::pair<std::string, std::string>, EvalReport> cells;
        cells[{"full", "ges"}] = perfect;
        const auto csvs = crossbar_csv(cells);
        REQUIRE(csvs.count("map_in") == 1);
        CHECK(csvs.at("map_in") == "model,ges\nfull,1.0\n");
        CHECK(csvs.at("e_map") == "model,ges\nfull,1.0\n");
    }

    SUBCASE("missing cells stay empty and ordering is sorted") {
        std::map<std::pair<std::string, std::string>, EvalReport> cells;
        cells[{"full", "ges"}] = perfect;
        cells[{"arcgis_only", "arcgis"}] = empty_dets;
        const auto csvs = crossbar_csv(cells);
        CHECK(csvs.at("map_in") ==
              "model,arcgis,ges\narcgis_only,0.0,\nfull,,1.0\n");
    }
}

TEST_CASE("predictions file round trip") {
    const std::vector<Detection> dets{det("img_1", box(10, 20, 30, 40), 0.75),
                                      det("img_2", box(50.5, 60.25, 7.5, 8.125), 0.5)};
    const std::string text = emit_predictions(dets);
    const std::vector<Detection> back = parse_predictions(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_id == "img_1");
    CHECK(back[0].bbox.cx == 10.0);
    CHECK(back[1].score == 0.5);
    CHECK(emit_predictions(back) == text);

    CHECK_THROWS_AS(parse_predictions("{"), ValidationError);
    CHECK_THROWS_AS(parse_predictions(R"([{"image_id": "x", "bbox": [1,2,3], "score": 0.5}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_predictions(R"([{"image_id": "x", "bbox": [1,2,3,4], "score": 1.5}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_predictions(R"([{"image_id": "x", "bbox": [1,2,0,4], "score": 0.5}])"),
                    ValidationError);
}

TEST_CASE("ground truth from manifest keeps empty images") {
    DatasetManifest manifest;
    ImageRecord with;
    with.image_id = "a";
    with.annotations.push_back({"LFBO", "14R", box(50, 50), "in", 1.0});
    with.annotations.push_back({"LFBO", "14L", box(150, 50), "extended", 0.8});
    ImageRecord without;
    without.image_id = "b";
    manifest.images = {with, without};

    const GroundTruthSet gt = ground_truth_from_manifest(manifest);
    CHECK(gt.images.size() == 2);
    CHECK(gt.in_count() == 1);
    CHECK(gt.extended_count() == 1);
    CHECK(gt.images.at("b").empty());
}
