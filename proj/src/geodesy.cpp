#include "rodd/geodesy.hpp"

#include <cmath>

namespace rodd {

namespace {

bool segments_properly_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
    const auto orient = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                           const Eigen::Vector2d& r) {
        return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    };
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0));
}

Eigen::Matrix3d rot_x(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Eigen::Matrix3d m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

Eigen::Matrix3d rot_y(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Eigen::Matrix3d m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

Eigen::Matrix3d rot_z(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Eigen::Matrix3d m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

// Columns: runway-forward, right, down, expressed in ENU components.
// This is the level reference frame shared by compose/extract.
Eigen::Matrix3d level_frame(const RunwayFrame& frame) {
    Eigen::Matrix3d level;
    level.col(0) = frame.along;
    level.col(1) = frame.cross;
    level.col(2) = -Eigen::Vector3d::UnitZ();
    return level;
}

}  // namespace

double wrap_signed_deg(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w <= 0.0) {
        w += 360.0;
    }
    return w - 180.0;
}

double wrap_heading_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return w;
}

void validate(const GeodeticPoint& p) {
    if (!std::isfinite(p.latitude_deg) || !std::isfinite(p.longitude_deg) ||
        !std::isfinite(p.altitude_m)) {
        throw ValidationError("geodetic point has non-finite components");
    }
    if (p.latitude_deg < -90.0 || p.latitude_deg > 90.0) {
        throw ValidationError("latitude out of [-90, 90]");
    }
    if (p.longitude_deg <= -180.0 || p.longitude_deg > 180.0) {
        throw ValidationError("longitude out of (-180, 180]");
    }
}

EcefVector geodetic_to_ecef(const GeodeticPoint& p) {
    const double lat = radians(p.latitude_deg);
    const double lon = radians(p.longitude_deg);
    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    const double n = kWgs84SemiMajorM / std::sqrt(1.0 - kWgs84EccSq * sin_lat * sin_lat);
    return {(n + p.altitude_m) * cos_lat * std::cos(lon),
            (n + p.altitude_m) * cos_lat * std::sin(lon),
            (n * (1.0 - kWgs84EccSq) + p.altitude_m) * sin_lat};
}

GeodeticPoint ecef_to_geodetic(const EcefVector& v) {
    if (v.norm() < 1.0) {
        throw ValidationError("ECEF vector too close to the Earth center");
    }
    const double p = std::hypot(v.x(), v.y());
    const double z = v.z();

    // Bowring's parametric-latitude start.
    const double ep_sq =
        (kWgs84SemiMajorM * kWgs84SemiMajorM - kWgs84SemiMinorM * kWgs84SemiMinorM) /
        (kWgs84SemiMinorM * kWgs84SemiMinorM);
    const double beta = std::atan2(z * kWgs84SemiMajorM, p * kWgs84SemiMinorM);
    double lat = std::atan2(z + ep_sq * kWgs84SemiMinorM * std::pow(std::sin(beta), 3),
                            p - kWgs84EccSq * kWgs84SemiMajorM * std::pow(std::cos(beta), 3));

    for (int i = 0; i < 10; ++i) {
        const double sin_lat = std::sin(lat);
        const double n = kWgs84SemiMajorM / std::sqrt(1.0 - kWgs84EccSq * sin_lat * sin_lat);
        const double next = std::atan2(z + kWgs84EccSq * n * sin_lat, p);
        const double delta = std::abs(next - lat);
        lat = next;
        if (delta < 1e-15) {
            break;
        }
    }

    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    // Pole-safe height: h = p cos(lat) + z sin(lat) - a sqrt(1 - e^2 sin^2).
    const double alt =
        p * cos_lat + z * sin_lat -
        kWgs84SemiMajorM * std::sqrt(1.0 - kWgs84EccSq * sin_lat * sin_lat);

    GeodeticPoint out;
    out.latitude_deg = degrees(lat);
    out.longitude_deg = wrap_signed_deg(degrees(std::atan2(v.y(), v.x())));
    out.altitude_m = alt;
    return out;
}

Eigen::Matrix3d ecef_to_enu_rotation(const GeodeticPoint& origin) {
    const double lat = radians(origin.latitude_deg);
    const double lon = radians(origin.longitude_deg);
    const double sl = std::sin(lat), cl = std::cos(lat);
    const double so = std::sin(lon), co = std::cos(lon);
    Eigen::Matrix3d r;
    r << -so, co, 0.0,
        -sl * co, -sl * so, cl,
        cl * co, cl * so, sl;
    return r;
}

Eigen::Vector3d enu_from(const GeodeticPoint& origin, const GeodeticPoint& target) {
    return ecef_to_enu_rotation(origin) * (geodetic_to_ecef(target) - geodetic_to_ecef(origin));
}

GeodeticPoint offset_by_enu(const GeodeticPoint& origin, const Eigen::Vector3d& enu) {
    const EcefVector ecef =
        geodetic_to_ecef(origin) + ecef_to_enu_rotation(origin).transpose() * enu;
    return ecef_to_geodetic(ecef);
}

void validate(const RunwayGeometry& rw) {
    if (rw.airport_icao.size() != 4) {
        throw ValidationError("airport ICAO code must have 4 characters: \"" + rw.airport_icao +
                              "\"");
    }
    if (rw.runway_id.empty()) {
        throw ValidationError("empty runway id at " + rw.airport_icao);
    }
    for (const auto& c : rw.corners) {
        validate(c);
    }
    const std::string where = rw.airport_icao + "/" + rw.runway_id;

    std::array<Eigen::Vector3d, 4> enu;
    for (int i = 0; i < 4; ++i) {
        enu[i] = enu_from(rw.corners[0], rw.corners[i]);
    }
    const auto horizontal = [](const Eigen::Vector3d& v) {
        return Eigen::Vector2d(v.x(), v.y());
    };
    const double width = (horizontal(enu[1]) - horizontal(enu[0])).norm();
    const Eigen::Vector2d thr_mid = 0.5 * (horizontal(enu[0]) + horizontal(enu[1]));
    const Eigen::Vector2d far_mid = 0.5 * (horizontal(enu[2]) + horizontal(enu[3]));
    const double length = (far_mid - thr_mid).norm();
    if (!(width > 0.0)) {
        throw ValidationError("runway width must be positive: " + where);
    }
    if (!(length > width)) {
        throw ValidationError("runway centerline length must exceed its width: " + where);
    }
    const std::array<Eigen::Vector2d, 4> q{horizontal(enu[0]), horizontal(enu[1]),
                                           horizontal(enu[2]), horizontal(enu[3])};
    if (segments_properly_intersect(q[0], q[1], q[2], q[3]) ||
        segments_properly_intersect(q[1], q[2], q[3], q[0])) {
        throw ValidationError("runway corner quadrilateral is self-intersecting: " + where);
    }
}

RunwayFrame build_runway_frame(const RunwayGeometry& rw) {
    const EcefVector thr_mid_ecef =
        0.5 * (geodetic_to_ecef(rw.corners[0]) + geodetic_to_ecef(rw.corners[1]));
    const EcefVector far_mid_ecef =
        0.5 * (geodetic_to_ecef(rw.corners[2]) + geodetic_to_ecef(rw.corners[3]));

    RunwayFrame frame;
    frame.ltp = ecef_to_geodetic(thr_mid_ecef);
    frame.ltp_ecef = geodetic_to_ecef(frame.ltp);
    frame.ecef_to_enu = ecef_to_enu_rotation(frame.ltp);

    Eigen::Vector3d to_far = frame.ecef_to_enu * (far_mid_ecef - frame.ltp_ecef);
    to_far.z() = 0.0;
    if (to_far.norm() < 1.0) {
        throw ValidationError("degenerate runway: centerline length below 1 m at " +
                              rw.airport_icao + "/" + rw.runway_id);
    }
    frame.along = to_far.normalized();
    frame.cross = frame.along.cross(Eigen::Vector3d::UnitZ()).normalized();
    frame.true_heading_deg = wrap_heading_deg(degrees(std::atan2(frame.along.x(), frame.along.y())));

    frame.vrp = offset_by_enu(frame.ltp, kVrpOffsetM * frame.along);
    frame.vrp.altitude_m = frame.ltp.altitude_m;
    return frame;
}

PoseParameters pose_parameters(const GeodeticPoint& position, const Attitude& attitude,
                               const RunwayFrame& frame) {
    const Eigen::Vector3d d = frame.ecef_to_enu * (geodetic_to_ecef(position) - frame.ltp_ecef);
    const double d_along = d.dot(frame.along);
    const double d_cross = d.dot(frame.cross);
    const double height = d.z();

    if (std::hypot(d_along - kVrpOffsetM, d_cross) < 1.0) {
        throw ValidationError("path angles are undefined within 1 m of the VRP");
    }

    PoseParameters p;
    p.along_track_m = d_along;
    // 0.0 - d_along keeps the denominator +0.0 when the aircraft sits exactly
    // on the LTP, so atan2 yields 0 rather than pi.
    p.lateral_path_angle_deg = degrees(std::atan2(d_cross, 0.0 - d_along));
    p.vertical_path_angle_deg = -degrees(std::atan2(height, 0.0 - d_along + kVrpOffsetM));
    p.relative_yaw_deg = wrap_signed_deg(attitude.heading_deg - frame.true_heading_deg);
    p.pitch_deg = attitude.pitch_deg;
    p.roll_deg = attitude.roll_deg;
    return p;
}

Eigen::Matrix3d compose_attitude(const RelativeAttitude& att, const RunwayFrame& frame) {
    return level_frame(frame) * rot_z(radians(att.relative_yaw_deg)) *
           rot_y(radians(att.pitch_deg)) * rot_x(radians(att.roll_deg));
}

RelativeAttitude extract_attitude(const Eigen::Matrix3d& body_to_enu, const RunwayFrame& frame) {
    const Eigen::Matrix3d a = level_frame(frame).transpose() * body_to_enu;
    const double sin_pitch = std::clamp(-a(2, 0), -1.0, 1.0);
    const double pitch = std::asin(sin_pitch);
    if (90.0 - std::abs(degrees(pitch)) < 0.1) {
        throw ValidationError("attitude extraction at gimbal lock (|pitch| within 0.1 deg of 90)");
    }
    RelativeAttitude out;
    out.relative_yaw_deg = degrees(std::atan2(a(1, 0), a(0, 0)));
    out.pitch_deg = degrees(pitch);
    out.roll_deg = degrees(std::atan2(a(2, 1), a(2, 2)));
    return out;
}

}  // namespace rodd
