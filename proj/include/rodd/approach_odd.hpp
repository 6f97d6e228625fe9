#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "rodd/geodesy.hpp"

namespace rodd {

// Closed interval [lo, hi]; membership is inclusive at both bounds, so a
// value exactly on a nominal bound is still nominal.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    double midpoint() const { return 0.5 * (lo + hi); }
    double half_width() const { return 0.5 * (hi - lo); }
    // 0 inside, otherwise distance to the nearest bound.
    double distance_to(double x) const;
};

// Scale about the midpoint: half-width becomes factor * half-width.
// Doubling the raw bounds instead would break on asymmetric intervals
// such as the vertical path angle range.
Interval extended_interval(const Interval& i, double factor);

struct OddSegment {
    Interval along_track;  // meters, negative on the approach side
    Interval yaw;          // degrees relative to runway heading
    Interval roll;         // degrees
};

using SegmentTable = std::array<OddSegment, 3>;

struct OddConfig {
    // Far-to-near approach segments with their per-segment yaw/roll ranges.
    SegmentTable segments{{{{-6000.0, -4500.0}, {-24.0, 24.0}, {-30.0, 30.0}},
                           {{-4500.0, -2500.0}, {-24.0, 24.0}, {-15.0, 15.0}},
                           {{-2500.0, -280.0}, {-18.5, 18.5}, {-10.0, 10.0}}}};
    Interval lateral{-3.0, 3.0};
    Interval vertical{-5.2, -1.8};
    Interval pitch{-15.0, 5.0};
    double extension_factor = 2.0;
    // The extended along-track envelope never reaches past the threshold:
    // its near bound is clamped to 0 m.
    bool clamp_along_track_hi_to_zero = true;
};

void validate(const OddConfig& cfg);

// Doubled (and optionally clamped) along-track interval of one segment.
Interval extended_along_track(const OddConfig& cfg, int segment_index);

enum class OddLabel { InOdd, ExtendedOdd, OutOfOdd };
enum class ParamStatus { Nominal, Extended, Out };
enum class OddParameter { AlongTrack, Lateral, Vertical, Yaw, Pitch, Roll };

const char* to_string(OddLabel label);
const char* to_string(ParamStatus status);
const char* to_string(OddParameter parameter);

struct ParameterCheck {
    OddParameter parameter = OddParameter::AlongTrack;
    double value = 0.0;
    Interval nominal;
    Interval extended;
    ParamStatus status = ParamStatus::Out;
};

struct OddClass {
    OddLabel label = OddLabel::OutOfOdd;
    int segment_index = 0;  // segment whose yaw/roll ranges were applied
    std::array<ParameterCheck, 6> per_parameter{};
};

struct SegmentChoice {
    int index = 0;
    bool extended = false;
};

// Segment whose nominal interval contains the along-track distance, or the
// nearest segment flagged extended when only a doubled envelope contains it.
// Nominal containment is checked far-to-near, so a shared bound belongs to
// the farther segment. Returns nullopt outside every doubled envelope.
std::optional<SegmentChoice> segment_for(double along_track_m, const OddConfig& cfg);

// Checks each of the six parameters against its nominal, then extended
// interval; yaw and roll ranges come from the segment chosen by segment_for.
// InOdd iff every status is nominal; ExtendedOdd iff none is out and at
// least one is extended. OutOfOdd is a value, never an error.
OddClass classify(const PoseParameters& p, const OddConfig& cfg);

// YAML serialization; the emitted form of the default config is the
// reference the CLI dumps.
OddConfig parse_odd_config(const std::string& yaml_text);
std::string emit_odd_config(const OddConfig& cfg);

// FNV-1a of the canonical emission; identifies the thresholds a dataset
// manifest was labelled with.
std::uint64_t odd_config_hash(const OddConfig& cfg);

}  // namespace rodd
