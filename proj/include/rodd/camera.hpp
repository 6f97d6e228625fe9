#pragma once

#include <array>
#include <optional>

#include <Eigen/Dense>

#include "rodd/geodesy.hpp"

namespace rodd {

// Pinhole intrinsics derived from the field of view: principal point at the
// image center, zero skew, no distortion. fov_x and fov_y are independent;
// pixels need not be square.
struct CameraModel {
    int width_px = 1024;
    int height_px = 1024;
    double fov_x_deg = 60.0;
    double fov_y_deg = 60.0;

    double focal_x_px() const { return (width_px / 2.0) / std::tan(radians(fov_x_deg) / 2.0); }
    double focal_y_px() const { return (height_px / 2.0) / std::tan(radians(fov_y_deg) / 2.0); }
    double center_x_px() const { return width_px / 2.0; }
    double center_y_px() const { return height_px / 2.0; }
};

void validate(const CameraModel& cam);

// Pixel coordinates: origin top-left, u rightward, v downward. Values may
// lie outside the image bounds.
struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
};

// Center-format box (cx, cy, w, h) in pixels.
struct PixelBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double x1() const { return cx - 0.5 * w; }
    double y1() const { return cy - 0.5 * h; }
    double x2() const { return cx + 0.5 * w; }
    double y2() const { return cy + 0.5 * h; }
    double area() const { return w * h; }

    static PixelBox from_corners(double x1, double y1, double x2, double y2) {
        return {0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
    }
};

// Camera frame: +x right (u), +y down (v), +z forward along the optical
// axis. `world_to_camera` takes ENU deltas at `position` to camera axes.
struct CameraPose {
    GeodeticPoint position;
    Eigen::Matrix3d world_to_camera = Eigen::Matrix3d::Identity();

    // Scenario attitude convention: heading in true degrees; tilt 0 points
    // the optical axis straight down with the image top toward `heading`,
    // tilt 90 levels it at the horizon; roll turns about the optical axis.
    static CameraPose from_heading_tilt_roll(const GeodeticPoint& position, double heading_deg,
                                             double tilt_deg, double roll_deg);
};

struct Projection {
    PixelPoint pixel;
    bool in_front = false;  // positive depth along the optical axis
};

// Throws when the point sits in the camera plane (|depth| below 1e-9 m),
// where the pinhole division is singular.
Projection project(const GeodeticPoint& p, const CameraModel& cam, const CameraPose& pose);

// Intersects the pixel ray with the surface of constant ellipsoidal altitude
// `ground_altitude_m` under the camera. Implemented as an iterated
// horizontal-plane intersection in the camera-local ENU frame, refined until
// the hit altitude matches within 1e-9 m; single-pass flat-plane error is
// centimeter-scale at kilometer ranges, which the round-trip tolerance does
// not allow. Throws when the ray is parallel to or pointing away from the
// ground.
GeodeticPoint backproject_to_ground(const PixelPoint& px, const CameraModel& cam,
                                    const CameraPose& pose, double ground_altitude_m);

// Acquisition pose for threshold imaging: camera `altitude_agl_m` above the
// threshold center, optical axis straight down, image top aligned with the
// runway heading so the runway extends toward the top of the image.
CameraPose nadir_calibration_pose(const GeodeticPoint& threshold_center, double runway_heading_deg,
                                  double altitude_agl_m);

struct QuadBox {
    PixelBox box;                   // axis-aligned, clipped to image bounds
    double visible_fraction = 0.0;  // clipped quad area / full quad area
};

// Axis-aligned box of the projected corner quadrilateral clipped to
// [0, W] x [0, H]. Returns nullopt when any corner is behind the camera
// (such runways are dropped rather than frustum-clipped in 3D) or when the
// visible area is zero.
std::optional<QuadBox> quad_to_bbox(const std::array<Projection, 4>& corners,
                                    const CameraModel& cam);

}  // namespace rodd
