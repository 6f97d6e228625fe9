#include "rodd/camera.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rodd {

namespace {

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
    if (poly.size() < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * std::abs(twice);
}

// Sutherland-Hodgman against one half-plane keep(p) >= 0.
std::vector<Eigen::Vector2d> clip_half_plane(const std::vector<Eigen::Vector2d>& poly,
                                             const Eigen::Vector2d& normal, double offset) {
    std::vector<Eigen::Vector2d> out;
    const auto signed_dist = [&](const Eigen::Vector2d& p) { return normal.dot(p) - offset; };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Eigen::Vector2d& cur = poly[i];
        const Eigen::Vector2d& nxt = poly[(i + 1) % poly.size()];
        const double dc = signed_dist(cur);
        const double dn = signed_dist(nxt);
        if (dc >= 0.0) {
            out.push_back(cur);
        }
        if ((dc >= 0.0) != (dn >= 0.0)) {
            const double t = dc / (dc - dn);
            out.push_back(cur + t * (nxt - cur));
        }
    }
    return out;
}

std::vector<Eigen::Vector2d> clip_to_rect(std::vector<Eigen::Vector2d> poly, double width,
                                          double height) {
    poly = clip_half_plane(poly, {1.0, 0.0}, 0.0);
    poly = clip_half_plane(poly, {-1.0, 0.0}, -width);
    poly = clip_half_plane(poly, {0.0, 1.0}, 0.0);
    poly = clip_half_plane(poly, {0.0, -1.0}, -height);
    return poly;
}

// Body axes (forward, right, down) for the given attitude, as a body-to-ENU
// rotation in the north-referenced level frame at the pose position.
Eigen::Matrix3d body_to_enu(double heading_deg, double pitch_deg, double roll_deg) {
    const double psi = radians(heading_deg);
    const double theta = radians(pitch_deg);
    const double phi = radians(roll_deg);
    Eigen::Matrix3d level;  // columns: north, east, down in ENU components
    level << 0, 1, 0,
             1, 0, 0,
             0, 0, -1;
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(psi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Matrix3d ry =
        Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3d rx = Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitX()).toRotationMatrix();
    return level * rz * ry * rx;
}

}  // namespace

void validate(const CameraModel& cam) {
    if (cam.width_px < 1 || cam.height_px < 1) {
        throw ValidationError("camera image size must be at least 1x1 pixel");
    }
    if (!(cam.fov_x_deg > 0.0) || cam.fov_x_deg >= 180.0 || !(cam.fov_y_deg > 0.0) ||
        cam.fov_y_deg >= 180.0) {
        throw ValidationError("camera field of view must lie in (0, 180) degrees");
    }
}

CameraPose CameraPose::from_heading_tilt_roll(const GeodeticPoint& position, double heading_deg,
                                              double tilt_deg, double roll_deg) {
    // tilt 0 = optical axis straight down = body pitch -90.
    const Eigen::Matrix3d body = body_to_enu(heading_deg, tilt_deg - 90.0, roll_deg);
    // Camera x = body right, camera y = body down, camera z = body forward.
    Eigen::Matrix3d camera_to_enu;
    camera_to_enu.col(0) = body.col(1);
    camera_to_enu.col(1) = body.col(2);
    camera_to_enu.col(2) = body.col(0);

    CameraPose pose;
    pose.position = position;
    pose.world_to_camera = camera_to_enu.transpose();
    return pose;
}

Projection project(const GeodeticPoint& p, const CameraModel& cam, const CameraPose& pose) {
    const Eigen::Vector3d enu =
        ecef_to_enu_rotation(pose.position) * (geodetic_to_ecef(p) - geodetic_to_ecef(pose.position));
    const Eigen::Vector3d c = pose.world_to_camera * enu;
    const double depth = c.z();
    if (std::abs(depth) < 1e-9) {
        throw ValidationError("projection singular: point lies in the camera plane");
    }
    Projection out;
    out.in_front = depth > 0.0;
    out.pixel.u = cam.center_x_px() + cam.focal_x_px() * (c.x() / depth);
    out.pixel.v = cam.center_y_px() + cam.focal_y_px() * (c.y() / depth);
    return out;
}

GeodeticPoint backproject_to_ground(const PixelPoint& px, const CameraModel& cam,
                                    const CameraPose& pose, double ground_altitude_m) {
    const Eigen::Vector3d dir_cam((px.u - cam.center_x_px()) / cam.focal_x_px(),
                                  (px.v - cam.center_y_px()) / cam.focal_y_px(), 1.0);
    const Eigen::Vector3d dir = pose.world_to_camera.transpose() * dir_cam;
    if (std::abs(dir.z()) < 1e-12) {
        throw ValidationError("backprojection: pixel ray is parallel to the ground plane");
    }

    const EcefVector cam_ecef = geodetic_to_ecef(pose.position);
    const Eigen::Matrix3d enu_to_ecef = ecef_to_enu_rotation(pose.position).transpose();

    double plane_z = ground_altitude_m - pose.position.altitude_m;
    GeodeticPoint hit;
    for (int i = 0; i < 12; ++i) {
        const double t = plane_z / dir.z();
        if (!(t > 0.0)) {
            throw ValidationError("backprojection: pixel ray points away from the ground");
        }
        hit = ecef_to_geodetic(cam_ecef + enu_to_ecef * (t * dir));
        const double err = hit.altitude_m - ground_altitude_m;
        if (std::abs(err) < 1e-9) {
            return hit;
        }
        plane_z -= err;
    }
    return hit;
}

CameraPose nadir_calibration_pose(const GeodeticPoint& threshold_center, double runway_heading_deg,
                                  double altitude_agl_m) {
    if (!(altitude_agl_m > 0.0)) {
        throw ValidationError("calibration pose requires a positive altitude above ground");
    }
    GeodeticPoint position = threshold_center;
    position.altitude_m += altitude_agl_m;
    return CameraPose::from_heading_tilt_roll(position, runway_heading_deg, 0.0, 0.0);
}

std::optional<QuadBox> quad_to_bbox(const std::array<Projection, 4>& corners,
                                    const CameraModel& cam) {
    std::vector<Eigen::Vector2d> quad;
    quad.reserve(4);
    for (const auto& c : corners) {
        if (!c.in_front) {
            return std::nullopt;
        }
        quad.emplace_back(c.pixel.u, c.pixel.v);
    }
    const double full_area = polygon_area(quad);
    if (full_area <= 0.0) {
        return std::nullopt;
    }
    const auto clipped = clip_to_rect(quad, static_cast<double>(cam.width_px),
                                      static_cast<double>(cam.height_px));
    const double visible_area = polygon_area(clipped);
    if (!(visible_area > 0.0)) {
        return std::nullopt;
    }

    double x1 = clipped[0].x(), y1 = clipped[0].y(), x2 = x1, y2 = y1;
    for (const auto& p : clipped) {
        x1 = std::min(x1, p.x());
        y1 = std::min(y1, p.y());
        x2 = std::max(x2, p.x());
        y2 = std::max(y2, p.y());
    }
    QuadBox out;
    out.box = PixelBox::from_corners(x1, y1, x2, y2);
    out.visible_fraction = std::clamp(visible_area / full_area, 0.0, 1.0);
    return out;
}

}  // namespace rodd
