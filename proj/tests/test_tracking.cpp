#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vdll/tracking.hpp"

#include <cmath>

using namespace vdll;

namespace {

// c / 1.023 MHz and chip * sqrt(0.5 / (4 * 0.02 * 10^4.5))
constexpr double kChip = 293.0522561094819;
constexpr double kSigma45 = 4.119884851265691;

ChannelRealization clear_link() {
    ChannelRealization r;
    r.cn0_instant = 45.0;
    return r;
}

TrackerChannel channel(TrackingMode mode, int id = 1) {
    TrackerChannel c;
    c.sv_id = id;
    c.mode = mode;
    return c;
}

}  // namespace

TEST_CASE("chip length") {
    CHECK(kChipLength == doctest::Approx(kChip).epsilon(1e-15));
}

TEST_CASE("true_pseudorange") {
    NavState truth;
    truth.position = {6378137.0, 0.0, 0.0};
    SatelliteState sv;
    sv.position = {6378137.0 + 26560000.0, 0.0, 0.0};
    ChannelRealization link;
    CHECK(true_pseudorange(truth, sv, link, 0.0) == 26560000.0);
    truth.clock_bias = 299.792458;  // one microsecond
    CHECK(true_pseudorange(truth, sv, link, 0.0) == doctest::Approx(26560000.0 + 299.792458).epsilon(1e-15));
    CHECK(true_pseudorange(truth, sv, link, 200.0) - true_pseudorange(truth, sv, link, 0.0) ==
          doctest::Approx(200.0));
    link.multipath_bias = 3.5;
    CHECK(true_pseudorange(truth, sv, link, 0.0) ==
          doctest::Approx(26560000.0 + 299.792458 + 3.5).epsilon(1e-15));
}

TEST_CASE("discriminator_noise_sigma") {
    CHECK(discriminator_noise_sigma(45.0) == doctest::Approx(kSigma45).epsilon(1e-12));
    CHECK(discriminator_noise_sigma(45.0 + 20.0 * std::log10(2.0)) / kSigma45 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(discriminator_noise_sigma(51.0) / kSigma45 - 0.5) < 0.01);
    double prev = 1e300;
    for (double c = 20.0; c <= 60.0; c += 0.5) {
        const double s = discriminator_noise_sigma(c);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("vector channel") {
    TrackingParams params;
    RngStream rng(1);

    SUBCASE("inside pull-in is valid") {
        TrackerChannel c = channel(TrackingMode::vector);
        const MeasurementEntry e = vector_channel_step(c, 1000.0, 900.0, clear_link(), 28.0, params, 0.0, rng);
        CHECK(e.valid);
        CHECK(c.locked);
        CHECK(e.code_error == 100.0);
        CHECK(e.variance == doctest::Approx(kSigma45 * kSigma45));
    }
    SUBCASE("400 m off is outside pull-in") {
        TrackerChannel c = channel(TrackingMode::vector);
        const MeasurementEntry e = vector_channel_step(c, 1400.0, 1000.0, clear_link(), 28.0, params, 0.0, rng);
        CHECK_FALSE(e.valid);
        CHECK(e.status == EntryStatus::out_of_pull_in);
        CHECK_FALSE(c.locked);
    }
    SUBCASE("noiseless with a perfect prediction") {
        TrackingParams quiet = params;
        quiet.noiseless = true;
        TrackerChannel c = channel(TrackingMode::vector);
        const MeasurementEntry e = vector_channel_step(c, 2e7, 2e7, clear_link(), 28.0, quiet, 0.0, rng);
        CHECK(e.valid);
        CHECK(e.residual == 0.0);
    }
    SUBCASE("blocked link") {
        TrackerChannel c = channel(TrackingMode::vector);
        const MeasurementEntry e = vector_channel_step(c, 1000.0, 1000.0, apply_condition(clear_link(), true), 28.0,
                                                       params, 0.0, rng);
        CHECK_FALSE(e.valid);
        CHECK(e.status == EntryStatus::blocked);
        CHECK(e.residual == 0.0);
    }
    SUBCASE("weak signal") {
        TrackerChannel c = channel(TrackingMode::vector);
        ChannelRealization weak = clear_link();
        weak.cn0_instant = 27.0;
        CHECK(vector_channel_step(c, 1000.0, 1000.0, weak, 28.0, params, 0.0, rng).status ==
              EntryStatus::weak_signal);
    }
    SUBCASE("extra variance is reported") {
        TrackerChannel c = channel(TrackingMode::vector);
        const MeasurementEntry e = vector_channel_step(c, 1000.0, 1000.0, clear_link(), 28.0, params, 25.0, rng);
        CHECK(e.variance == doctest::Approx(kSigma45 * kSigma45 + 25.0));
    }
    SUBCASE("vector mode never touches the code estimate") {
        TrackerChannel c = channel(TrackingMode::vector);
        c.code_phase_estimate = 12345.0;
        vector_channel_step(c, 1000.0, 990.0, clear_link(), 28.0, params, 0.0, rng);
        CHECK(c.code_phase_estimate == 12345.0);
    }
}

TEST_CASE("vector residual noise matches the reported sigma") {
    TrackingParams params;
    RngStream rng(77);
    TrackerChannel c = channel(TrackingMode::vector);
    const int n = 20000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const MeasurementEntry e = vector_channel_step(c, 5000.0, 5000.0, clear_link(), 28.0, params, 0.0, rng);
        const double z = e.residual / std::sqrt(e.variance);
        s += z;
        ss += z * z;
    }
    const double mean = s / n, var = ss / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var > 0.9);
    CHECK(var < 1.1);
}

TEST_CASE("scalar loop tracks a steady signal") {
    TrackingParams params;
    RngStream rng(3);
    TrackerChannel c = channel(TrackingMode::scalar);
    const double dt = 0.1;
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        const double rho = 2.2e7;
        const MeasurementEntry e = scalar_channel_step(c, rho, rho, clear_link(), 28.0, dt, params, 0.0, rng);
        REQUIRE(e.valid);
        worst = std::max(worst, std::abs(e.code_error));
    }
    // loop-filtered noise stays a few sigma
    CHECK(worst < 6.0 * kSigma45);
}

TEST_CASE("scalar loop first-order update") {
    TrackingParams params;
    params.noiseless = true;
    RngStream rng(3);
    TrackerChannel c = channel(TrackingMode::scalar);
    scalar_channel_step(c, 1000.0, 1000.0, clear_link(), 28.0, 0.1, params, 0.0, rng);
    CHECK(c.code_phase_estimate == 1000.0);
    // g = 4 * 1 Hz * 0.1 s
    const MeasurementEntry e = scalar_channel_step(c, 1100.0, 1000.0, clear_link(), 28.0, 0.1, params, 0.0, rng);
    CHECK(c.code_phase_estimate == doctest::Approx(1040.0));
    CHECK(e.residual == doctest::Approx(40.0));
    CHECK(e.code_error == doctest::Approx(60.0));
}

TEST_CASE("scalar loop unlocks after a 20 s outage at 100 m/s") {
    TrackingParams params;
    RngStream rng(4);
    TrackerChannel c = channel(TrackingMode::scalar);
    const double dt = 0.1;
    double rho = 2.2e7;
    int k = 0;
    for (; k < 100; ++k, rho += 100.0 * dt) {
        scalar_channel_step(c, rho, rho, clear_link(), 28.0, dt, params, 0.0, rng);
    }
    const double held = c.code_phase_estimate;
    for (int j = 0; j < 200; ++j, ++k, rho += 100.0 * dt) {
        const MeasurementEntry e =
            scalar_channel_step(c, rho, rho, apply_condition(clear_link(), true), 28.0, dt, params, 0.0, rng);
        REQUIRE_FALSE(e.valid);
    }
    CHECK(c.code_phase_estimate == held);
    // coasted error ~ 2000 m, far beyond one chip
    CHECK(rho - c.code_phase_estimate > 1900.0);

    MeasurementEntry e = scalar_channel_step(c, rho, rho, clear_link(), 28.0, dt, params, 0.0, rng);
    CHECK(e.status == EntryStatus::out_of_pull_in);
    int invalid = 1;
    while (!e.valid) {
        rho += 100.0 * dt;
        e = scalar_channel_step(c, rho, rho, clear_link(), 28.0, dt, params, 0.0, rng);
        if (!e.valid) {
            CHECK(e.status == EntryStatus::reacquiring);
            ++invalid;
        }
        REQUIRE(invalid < 100);
    }
    CHECK(invalid * dt >= 2.0 - 1e-9);
    CHECK(std::abs(e.code_error) < 5.0 * kSigma45);
}

TEST_CASE("static geometry keeps scalar lock through an outage") {
    TrackingParams params;
    RngStream rng(6);
    TrackerChannel c = channel(TrackingMode::scalar);
    const double rho = 2.1e7;
    for (int k = 0; k < 50; ++k) scalar_channel_step(c, rho, rho, clear_link(), 28.0, 0.1, params, 0.0, rng);
    for (int k = 0; k < 200; ++k) {
        scalar_channel_step(c, rho, rho, apply_condition(clear_link(), true), 28.0, 0.1, params, 0.0, rng);
    }
    const MeasurementEntry e = scalar_channel_step(c, rho, rho, clear_link(), 28.0, 0.1, params, 0.0, rng);
    CHECK(e.valid);
    CHECK(e.status == EntryStatus::ok);
}

TEST_CASE("assemble_measurements") {
    MeasurementEntry a, b, c;
    a.sv_id = 5;
    a.valid = true;
    a.variance = 1.0;
    b.sv_id = 2;
    b.valid = false;
    c.sv_id = 9;
    c.valid = true;
    c.variance = 4.0;

    const MeasurementSet z = assemble_measurements(1.5, {a, b, c});
    REQUIRE(z.entries.size() == 3);
    CHECK(z.entries[0].sv_id == 2);
    CHECK(z.entries[1].sv_id == 5);
    CHECK(z.entries[2].sv_id == 9);
    CHECK(z.valid_count() == 2);
    CHECK(z.valid_entries().front().sv_id == 5);

    CHECK(assemble_measurements(0.0, {b}).valid_count() == 0);
    CHECK_THROWS_AS(assemble_measurements(0.0, {a, a}), MeasurementSetError);
    MeasurementEntry bad = a;
    bad.variance = 0.0;
    CHECK_THROWS_AS(assemble_measurements(0.0, {bad}), MeasurementSetError);
}
