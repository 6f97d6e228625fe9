#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rodd/camera.hpp"
#include "rodd/random.hpp"
#include "support/synthetic.hpp"

using namespace rodd;

namespace {

const CameraModel kCam{1024, 1024, 60.0, 60.0};

}  // namespace

TEST_CASE("camera model validation and focal lengths") {
    CHECK(kCam.focal_x_px() == doctest::Approx(512.0 / std::tan(radians(30.0))));
    CHECK_THROWS_AS(validate(CameraModel{0, 1024, 60.0, 60.0}), ValidationError);
    CHECK_THROWS_AS(validate(CameraModel{1024, 1024, 0.0, 60.0}), ValidationError);
    CHECK_THROWS_AS(validate(CameraModel{1024, 1024, 60.0, 180.0}), ValidationError);
}

TEST_CASE("nadir projection hits the principal point") {
    const GeodeticPoint ground{43.0, 1.5, 100.0};
    const CameraPose pose = nadir_calibration_pose(ground, 0.0, 400.0);
    const Projection p = project(ground, kCam, pose);
    CHECK(p.in_front);
    CHECK(p.pixel.u == doctest::Approx(512.0).epsilon(1e-9));
    CHECK(p.pixel.v == doctest::Approx(512.0).epsilon(1e-9));
}

TEST_CASE("half field of view maps to the image border") {
    const GeodeticPoint ground{10.0, 10.0, 0.0};
    const CameraPose pose = nadir_calibration_pose(ground, 0.0, 400.0);
    // Heading 0 puts north at the image top, so east is +u.
    const GeodeticPoint east =
        offset_by_enu(ground, Eigen::Vector3d(400.0 * std::tan(radians(30.0)), 0.0, 0.0));
    const Projection p = project(east, kCam, pose);
    CHECK(p.in_front);
    CHECK(std::abs(p.pixel.u - 1024.0) < 0.05);
    CHECK(std::abs(p.pixel.v - 512.0) < 0.05);
}

TEST_CASE("points behind a level camera are flagged") {
    const GeodeticPoint origin{0.0, 0.0, 500.0};
    // Level camera looking north.
    const CameraPose pose = CameraPose::from_heading_tilt_roll(origin, 0.0, 90.0, 0.0);
    const GeodeticPoint south = offset_by_enu(origin, Eigen::Vector3d(0.0, -1000.0, 0.0));
    CHECK_FALSE(project(south, kCam, pose).in_front);

    const GeodeticPoint north = offset_by_enu(origin, Eigen::Vector3d(0.0, 1000.0, 0.0));
    CHECK(project(north, kCam, pose).in_front);
}

TEST_CASE("projection is singular in the camera plane") {
    const GeodeticPoint origin{0.0, 0.0, 500.0};
    const CameraPose pose = CameraPose::from_heading_tilt_roll(origin, 0.0, 90.0, 0.0);
    const GeodeticPoint abeam = offset_by_enu(origin, Eigen::Vector3d(10.0, 0.0, 0.0));
    CHECK_THROWS_AS(project(abeam, kCam, pose), ValidationError);
}

TEST_CASE("backprojection inverts projection on ground points") {
    const GeodeticPoint ground{44.0, 2.0, 150.0};

    SUBCASE("nadir center ray") {
        const CameraPose pose = nadir_calibration_pose(ground, 77.0, 400.0);
        const GeodeticPoint hit = backproject_to_ground({512.0, 512.0}, kCam, pose, 150.0);
        CHECK((geodetic_to_ecef(hit) - geodetic_to_ecef(ground)).norm() < 1e-6);
    }

    SUBCASE("border pixel lands H*tan(fov/2) away") {
        const CameraPose pose = nadir_calibration_pose(ground, 0.0, 400.0);
        const GeodeticPoint hit = backproject_to_ground({1024.0, 512.0}, kCam, pose, 150.0);
        // The hit sits exactly on the 30-degree border ray.
        const Eigen::Vector3d ray = enu_from(pose.position, hit);
        CHECK(std::hypot(ray.x(), ray.y()) / -ray.z() ==
              doctest::Approx(std::tan(radians(30.0))).epsilon(1e-12));
        // The flat-plane right triangle is off only by the curvature drop
        // (~4 mm at 231 m), which the oblique ray stretches to ~2.4 mm.
        const Eigen::Vector3d enu = enu_from(ground, hit);
        CHECK(std::abs(std::hypot(enu.x(), enu.y()) - 400.0 * std::tan(radians(30.0))) < 5e-3);
    }

    SUBCASE("round trip over random oblique views") {
        Rng rng(7);
        for (int i = 0; i < 300; ++i) {
            const GeodeticPoint cam_pos{rng.uniform(-50.0, 50.0), rng.uniform(-170.0, 170.0),
                                        rng.uniform(200.0, 2000.0)};
            // Tilt kept below 50 deg so ground rays stay well off-grazing.
            const CameraPose pose = CameraPose::from_heading_tilt_roll(
                cam_pos, rng.uniform(0.0, 360.0), rng.uniform(0.0, 50.0), rng.uniform(-20.0, 20.0));
            const double ground_alt = rng.uniform(-50.0, cam_pos.altitude_m - 150.0);
            const PixelPoint px{rng.uniform(0.0, 1024.0), rng.uniform(0.0, 1024.0)};
            GeodeticPoint hit;
            try {
                hit = backproject_to_ground(px, kCam, pose, ground_alt);
            } catch (const ValidationError&) {
                continue;  // grazing ray; outside the contract
            }
            CHECK(std::abs(hit.altitude_m - ground_alt) < 1e-6);
            const Projection back = project(hit, kCam, pose);
            CHECK(back.in_front);
            CHECK(std::abs(back.pixel.u - px.u) < 1e-3);
            CHECK(std::abs(back.pixel.v - px.v) < 1e-3);
        }
    }
}

TEST_CASE("backprojection rejects rays that miss the ground") {
    const GeodeticPoint origin{0.0, 0.0, 500.0};
    const CameraPose level = CameraPose::from_heading_tilt_roll(origin, 0.0, 90.0, 0.0);
    // Center row of a level camera: parallel to the ground plane.
    CHECK_THROWS_AS(backproject_to_ground({512.0, 512.0}, kCam, level, 0.0), ValidationError);
    // Upper half of the image points above the horizon.
    CHECK_THROWS_AS(backproject_to_ground({512.0, 100.0}, kCam, level, 0.0), ValidationError);
}

TEST_CASE("nadir calibration pose orientation") {
    const GeodeticPoint thr{43.6, 1.34, 150.0};

    SUBCASE("heading zero puts north at the image top") {
        const CameraPose pose = nadir_calibration_pose(thr, 0.0, 400.0);
        const GeodeticPoint north = offset_by_enu(thr, Eigen::Vector3d(0.0, 10.0, 0.0));
        const Projection p = project(north, kCam, pose);
        CHECK(p.pixel.v < 512.0);
        CHECK(std::abs(p.pixel.u - 512.0) < 1e-6);
    }

    SUBCASE("rejects non-positive altitude") {
        CHECK_THROWS_AS(nadir_calibration_pose(thr, 0.0, 0.0), ValidationError);
    }

    SUBCASE("threshold corners project at the analytic separation") {
        const double heading = 143.2;
        const CameraPose pose = nadir_calibration_pose(thr, heading, 400.0);
        const double h = radians(heading);
        const Eigen::Vector3d right(std::cos(h), -std::sin(h), 0.0);
        const GeodeticPoint left_corner = offset_by_enu(thr, -22.5 * right);
        const GeodeticPoint right_corner = offset_by_enu(thr, 22.5 * right);

        const Projection pl = project(left_corner, kCam, pose);
        const Projection pr = project(right_corner, kCam, pose);
        const double separation = std::hypot(pr.pixel.u - pl.pixel.u, pr.pixel.v - pl.pixel.v);
        const double expected = 45.0 / (2.0 * 400.0 * std::tan(radians(30.0))) * 1024.0;
        CHECK(separation == doctest::Approx(expected).epsilon(1e-4));
        // The corners sit on the u axis: runway-left maps to -u.
        CHECK(pl.pixel.u < 512.0);
        CHECK(std::abs(pl.pixel.v - 512.0) < 1e-3);

        // Back-projection recovers both corners.
        const GeodeticPoint rl = backproject_to_ground(pl.pixel, kCam, pose, left_corner.altitude_m);
        const GeodeticPoint rr = backproject_to_ground(pr.pixel, kCam, pose, right_corner.altitude_m);
        CHECK((geodetic_to_ecef(rl) - geodetic_to_ecef(left_corner)).norm() < 1e-3);
        CHECK((geodetic_to_ecef(rr) - geodetic_to_ecef(right_corner)).norm() < 1e-3);
    }
}

TEST_CASE("quad_to_bbox clips and measures visibility") {
    const auto proj = [](double u, double v) {
        Projection p;
        p.pixel = {u, v};
        p.in_front = true;
        return p;
    };

    SUBCASE("fully visible quad") {
        const std::array<Projection, 4> quad{proj(100.0, 100.0), proj(300.0, 120.0),
                                             proj(280.0, 400.0), proj(90.0, 380.0)};
        const auto result = quad_to_bbox(quad, kCam);
        REQUIRE(result.has_value());
        CHECK(result->visible_fraction == doctest::Approx(1.0));
        CHECK(result->box.x1() == doctest::Approx(90.0));
        CHECK(result->box.y1() == doctest::Approx(100.0));
        CHECK(result->box.x2() == doctest::Approx(300.0));
        CHECK(result->box.y2() == doctest::Approx(400.0));
    }

    SUBCASE("axis-aligned rectangle half outside the left edge") {
        const std::array<Projection, 4> quad{proj(-100.0, 200.0), proj(100.0, 200.0),
                                             proj(100.0, 300.0), proj(-100.0, 300.0)};
        const auto result = quad_to_bbox(quad, kCam);
        REQUIRE(result.has_value());
        CHECK(result->visible_fraction == doctest::Approx(0.5));
        CHECK(result->box.x1() == doctest::Approx(0.0));
        CHECK(result->box.x2() == doctest::Approx(100.0));
    }

    SUBCASE("any corner behind the camera drops the quad") {
        std::array<Projection, 4> quad{proj(100.0, 100.0), proj(300.0, 120.0), proj(280.0, 400.0),
                                       proj(90.0, 380.0)};
        quad[2].in_front = false;
        CHECK_FALSE(quad_to_bbox(quad, kCam).has_value());
    }

    SUBCASE("fully outside the image") {
        const std::array<Projection, 4> quad{proj(2000.0, 100.0), proj(2200.0, 100.0),
                                             proj(2200.0, 300.0), proj(2000.0, 300.0)};
        CHECK_FALSE(quad_to_bbox(quad, kCam).has_value());
    }

    SUBCASE("degenerate quad has no box") {
        const std::array<Projection, 4> quad{proj(10.0, 10.0), proj(10.0, 10.0), proj(10.0, 10.0),
                                             proj(10.0, 10.0)};
        CHECK_FALSE(quad_to_bbox(quad, kCam).has_value());
    }

    SUBCASE("visible fraction decreases monotonically while sliding out") {
        double previous = 1.1;
        for (int step = 0; step < 30; ++step) {
            const double shift = 60.0 * step;
            const std::array<Projection, 4> quad{
                proj(700.0 + shift, 200.0), proj(1000.0 + shift, 200.0),
                proj(1000.0 + shift, 500.0), proj(700.0 + shift, 500.0)};
            const auto result = quad_to_bbox(quad, kCam);
            const double fraction = result ? result->visible_fraction : 0.0;
            CHECK(fraction <= previous + 1e-12);
            if (result) {
                CHECK(result->box.x1() >= -1e-9);
                CHECK(result->box.x2() <= 1024.0 + 1e-9);
                CHECK(fraction >= 0.0);
                CHECK(fraction <= 1.0);
            }
            previous = fraction;
        }
    }
}
