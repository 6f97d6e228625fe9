#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rodd/approach_odd.hpp"
#include "rodd/random.hpp"

using namespace rodd;

namespace {

PoseParameters params(double along, double lateral, double vertical, double yaw, double pitch,
                      double roll) {
    return {along, lateral, vertical, yaw, pitch, roll};
}

PoseParameters random_params(Rng& rng, double scale) {
    return {rng.uniform(-7000.0, 500.0),     rng.uniform(-4.0 * scale, 4.0 * scale),
            rng.uniform(-7.0 * scale, 0.5),  rng.uniform(-50.0 * scale, 50.0 * scale),
            rng.uniform(-20.0 * scale, 8.0), rng.uniform(-40.0 * scale, 40.0 * scale)};
}

}  // namespace

TEST_CASE("extended_interval scales about the midpoint") {
    const Interval yaw = extended_interval({-24.0, 24.0}, 2.0);
    CHECK(yaw.lo == doctest::Approx(-48.0).epsilon(1e-15));
    CHECK(yaw.hi == doctest::Approx(48.0).epsilon(1e-15));

    // Asymmetric vertical range: midpoint -3.5, half-width 1.7.
    const Interval vertical = extended_interval({-5.2, -1.8}, 2.0);
    CHECK(vertical.lo == doctest::Approx(-6.9).epsilon(1e-12));
    CHECK(vertical.hi == doctest::Approx(-0.1).epsilon(1e-12));

    const Interval same = extended_interval({-5.2, -1.8}, 1.0);
    CHECK(same.lo == doctest::Approx(-5.2));
    CHECK(same.hi == doctest::Approx(-1.8));

    CHECK_THROWS_AS(extended_interval({0.0, 1.0}, 0.5), ValidationError);
}

TEST_CASE("extended_interval commutes with mirroring about zero") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(-100.0, 100.0);
        const double b = rng.uniform(-100.0, 100.0);
        const Interval base{std::min(a, b), std::max(a, b)};
        const double factor = rng.uniform(1.0, 4.0);
        const Interval mirrored{-base.hi, -base.lo};
        const Interval lhs = extended_interval(mirrored, factor);
        const Interval rhs = extended_interval(base, factor);
        CHECK(lhs.lo == doctest::Approx(-rhs.hi).epsilon(1e-12));
        CHECK(lhs.hi == doctest::Approx(-rhs.lo).epsilon(1e-12));
    }
}

TEST_CASE("segment_for picks nominal segments far to near") {
    const OddConfig cfg;
    const auto far = segment_for(-5000.0, cfg);
    REQUIRE(far.has_value());
    CHECK(far->index == 0);
    CHECK_FALSE(far->extended);

    // Near boundary is inclusive.
    const auto near_end = segment_for(-280.0, cfg);
    REQUIRE(near_end.has_value());
    CHECK(near_end->index == 2);
    CHECK_FALSE(near_end->extended);

    // Shared bounds belong to the farther segment.
    const auto shared = segment_for(-4500.0, cfg);
    REQUIRE(shared.has_value());
    CHECK(shared->index == 0);
    CHECK_FALSE(shared->extended);
}

TEST_CASE("segment_for falls back to the doubled envelope") {
    const OddConfig cfg;
    const auto close_in = segment_for(-100.0, cfg);
    REQUIRE(close_in.has_value());
    CHECK(close_in->index == 2);
    CHECK(close_in->extended);

    const auto far_out = segment_for(-6500.0, cfg);
    REQUIRE(far_out.has_value());
    CHECK(far_out->index == 0);
    CHECK(far_out->extended);

    CHECK_FALSE(segment_for(-6800.0, cfg).has_value());
    // Clamped at the threshold: beyond the LTP is never extended.
    CHECK_FALSE(segment_for(5.0, cfg).has_value());

    OddConfig unclamped = cfg;
    unclamped.clamp_along_track_hi_to_zero = false;
    CHECK(segment_for(5.0, unclamped).has_value());
}

TEST_CASE("classify reproduces the segment-table cases") {
    const OddConfig cfg;

    // Segment 0 allows yaw up to 24 and roll up to 30.
    const OddClass in = classify(params(-5000.0, 0.0, -3.0, 20.0, -5.0, 25.0), cfg);
    CHECK(in.label == OddLabel::InOdd);
    CHECK(in.segment_index == 0);

    // Segment 2 yaw bound is 18.5; 20 is inside the doubled 37.
    const OddClass extended = classify(params(-1000.0, 0.0, -3.0, 20.0, -5.0, 0.0), cfg);
    CHECK(extended.label == OddLabel::ExtendedOdd);
    CHECK(extended.segment_index == 2);
    CHECK(extended.per_parameter[3].status == ParamStatus::Extended);

    // Beyond the doubled yaw bound.
    const OddClass out = classify(params(-1000.0, 0.0, -3.0, 40.0, -5.0, 0.0), cfg);
    CHECK(out.label == OddLabel::OutOfOdd);
    CHECK(out.per_parameter[3].status == ParamStatus::Out);
}

TEST_CASE("classify boundary values are nominal") {
    const OddConfig cfg;
    CHECK(classify(params(-6000.0, 3.0, -5.2, 24.0, -15.0, 30.0), cfg).label == OddLabel::InOdd);
    CHECK(classify(params(-280.0, -3.0, -1.8, -18.5, 5.0, -10.0), cfg).label == OddLabel::InOdd);
}

TEST_CASE("classification partitions and nests") {
    const OddConfig cfg;
    Rng rng(23);
    for (int i = 0; i < 20000; ++i) {
        const PoseParameters p = random_params(rng, 1.0);
        const OddClass c = classify(p, cfg);

        bool any_out = false, any_ext = false;
        for (const auto& check : c.per_parameter) {
            any_out = any_out || check.status == ParamStatus::Out;
            any_ext = any_ext || check.status == ParamStatus::Extended;
            if (check.status == ParamStatus::Nominal) {
                CHECK(check.nominal.contains(check.value));
            }
            // Nominal nests inside extended.
            if (check.nominal.contains(check.value)) {
                CHECK(check.extended.contains(check.value));
            }
        }
        const OddLabel expected = any_out   ? OddLabel::OutOfOdd
                                  : any_ext ? OddLabel::ExtendedOdd
                                            : OddLabel::InOdd;
        CHECK(c.label == expected);
        if (c.label == OddLabel::InOdd) {
            for (const auto& check : c.per_parameter) {
                CHECK(check.extended.contains(check.value));
            }
        }
    }
}

TEST_CASE("moving a parameter toward its midpoint preserves InOdd") {
    const OddConfig cfg;
    Rng rng(31);
    int checked = 0;
    while (checked < 2000) {
        const PoseParameters p = random_params(rng, 0.9);
        OddClass c = classify(p, cfg);
        if (c.label != OddLabel::InOdd) {
            continue;
        }
        ++checked;
        const int which = static_cast<int>(rng.below(6));
        const ParameterCheck& check = c.per_parameter[static_cast<std::size_t>(which)];
        const double toward = check.nominal.midpoint();
        const double moved = check.value + rng.uniform01() * (toward - check.value);

        PoseParameters q = p;
        switch (which) {
            case 0: q.along_track_m = moved; break;
            case 1: q.lateral_path_angle_deg = moved; break;
            case 2: q.vertical_path_angle_deg = moved; break;
            case 3: q.relative_yaw_deg = moved; break;
            case 4: q.pitch_deg = moved; break;
            case 5: q.roll_deg = moved; break;
        }
        CHECK(classify(q, cfg).label == OddLabel::InOdd);
    }
}

TEST_CASE("odd config YAML round trip") {
    const OddConfig cfg;
    const std::string text = emit_odd_config(cfg);
    const OddConfig back = parse_odd_config(text);
    CHECK(emit_odd_config(back) == text);
    CHECK(odd_config_hash(back) == odd_config_hash(cfg));

    OddConfig tweaked = cfg;
    tweaked.extension_factor = 1.5;
    CHECK(odd_config_hash(tweaked) != odd_config_hash(cfg));
    const OddConfig tweaked_back = parse_odd_config(emit_odd_config(tweaked));
    CHECK(tweaked_back.extension_factor == doctest::Approx(1.5));
}

TEST_CASE("odd config validation") {
    OddConfig cfg;
    cfg.extension_factor = 0.9;
    CHECK_THROWS_AS(validate(cfg), ValidationError);

    OddConfig gap;
    gap.segments[1].along_track.lo = -4400.0;  // hole between segments
    CHECK_THROWS_AS(validate(gap), ValidationError);

    CHECK_THROWS_AS(parse_odd_config("segments: [1, 2]"), ValidationError);
    CHECK_THROWS_AS(parse_odd_config(": ["), ValidationError);
}
