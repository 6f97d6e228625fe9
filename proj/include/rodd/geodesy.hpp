#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "rodd/errors.hpp"

namespace rodd {

// WGS84 ellipsoid. All altitudes in the toolkit are ellipsoidal heights;
// no geoid or terrain model is applied.
inline constexpr double kWgs84SemiMajorM = 6378137.0;
inline constexpr double kWgs84Flattening = 1.0 / 298.257223563;
inline constexpr double kWgs84SemiMinorM = kWgs84SemiMajorM * (1.0 - kWgs84Flattening);
inline constexpr double kWgs84EccSq = kWgs84Flattening * (2.0 - kWgs84Flattening);

// Centerline distance from the landing threshold point to the vertical
// reference point.
inline constexpr double kVrpOffsetM = 305.0;

inline double radians(double deg) { return deg * (M_PI / 180.0); }
inline double degrees(double rad) { return rad * (180.0 / M_PI); }

// Wrap to (-180, 180].
double wrap_signed_deg(double deg);
// Wrap to [0, 360).
double wrap_heading_deg(double deg);

struct GeodeticPoint {
    double latitude_deg = 0.0;   // [-90, 90]
    double longitude_deg = 0.0;  // (-180, 180]
    double altitude_m = 0.0;     // above the WGS84 ellipsoid
};

void validate(const GeodeticPoint& p);

using EcefVector = Eigen::Vector3d;  // meters, Earth-centered Earth-fixed

EcefVector geodetic_to_ecef(const GeodeticPoint& p);

// Inverse conversion. Bowring initial guess followed by fixed-point
// refinement of the latitude; converges below 1e-12 deg / 1e-9 m within
// four iterations for |altitude| <= 100 km (covered by the round-trip
// tests). Throws for vectors within 1 m of the Earth center, where the
// latitude is undefined.
GeodeticPoint ecef_to_geodetic(const EcefVector& v);

// Rotation taking ECEF deltas to east-north-up components at `origin`.
Eigen::Matrix3d ecef_to_enu_rotation(const GeodeticPoint& origin);

// ENU components of `target` relative to `origin`.
Eigen::Vector3d enu_from(const GeodeticPoint& origin, const GeodeticPoint& target);

// Point reached from `origin` by an ENU displacement.
GeodeticPoint offset_by_enu(const GeodeticPoint& origin, const Eigen::Vector3d& enu);

struct RunwayGeometry {
    std::string airport_icao;  // 4-character ICAO code
    std::string runway_id;     // designator, e.g. "14R"
    // Ordered: threshold-left, threshold-right, far-right, far-left
    // (left/right as seen by an aircraft approaching this threshold).
    std::array<GeodeticPoint, 4> corners{};
    bool has_piano = false;
    std::string source;  // data source the corners were calibrated against
};

// Checks width > 0, centerline length > width and that the corner
// quadrilateral is simple in the local tangent plane.
void validate(const RunwayGeometry& rw);

// Runway-anchored local frame. `along`, `cross` and up (+z) are unit vectors
// in ENU components at the LTP; `along` points horizontally toward the far
// end, `cross` to its right.
struct RunwayFrame {
    GeodeticPoint ltp;  // midpoint of the threshold edge
    GeodeticPoint vrp;  // on the centerline, 305 m past the LTP, at LTP altitude
    double true_heading_deg = 0.0;
    Eigen::Matrix3d ecef_to_enu = Eigen::Matrix3d::Identity();
    EcefVector ltp_ecef = EcefVector::Zero();
    Eigen::Vector3d along = Eigen::Vector3d::UnitY();
    Eigen::Vector3d cross = Eigen::Vector3d::UnitX();
};

RunwayFrame build_runway_frame(const RunwayGeometry& rw);

struct Attitude {
    double heading_deg = 0.0;  // true heading, [0, 360)
    double pitch_deg = 0.0;    // nose-up positive, [-90, 90]
    double roll_deg = 0.0;     // right-wing-down positive, (-180, 180]
};

struct RelativeAttitude {
    double relative_yaw_deg = 0.0;  // heading relative to the runway heading
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
};

// The six pose parameters of an aircraft relative to one runway.
// Sign conventions: approach positions have negative along-track distance;
// right of centerline is positive lateral; a descending glide reads as a
// negative vertical path angle (a 3 degree glide is -3).
struct PoseParameters {
    double along_track_m = 0.0;
    double lateral_path_angle_deg = 0.0;
    double vertical_path_angle_deg = 0.0;
    double relative_yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
};

// Extracts the pose parameters of a world pose with respect to a runway.
// All angles are computed in the flat ENU tangent plane anchored at the LTP;
// at approach ranges (<= 6 km) the curvature error is sub-centimeter.
// Throws if the position lies within 1 m of the VRP horizontally, where the
// path angles are undefined.
PoseParameters pose_parameters(const GeodeticPoint& position, const Attitude& attitude,
                               const RunwayFrame& frame);

// Intrinsic Z-Y'-X'' composition: starting aligned with the runway heading
// and local level, yaw about local down, then pitch about the resulting
// lateral axis, then roll about the resulting longitudinal axis. Returns the
// body-to-ENU rotation (ENU at the LTP).
Eigen::Matrix3d compose_attitude(const RelativeAttitude& att, const RunwayFrame& frame);

// Inverse of compose_attitude away from gimbal lock; throws when the pitch
// is within 0.1 degrees of +/-90.
RelativeAttitude extract_attitude(const Eigen::Matrix3d& body_to_enu, const RunwayFrame& frame);

}  // namespace rodd
