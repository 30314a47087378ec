#include "finray/tactile.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace finray;
using finray::testing::error_name;
using finray::testing::random_trace_spec;

namespace {

TactileFrame uniform_frame(double v, double t = 0.0) {
    TactileFrame f;
    f.timestamp = t;
    f.values.fill(v);
    return f;
}

} // namespace

TEST_CASE("lowpass closed forms") {
    Trace step;
    step.push_back(uniform_frame(0.0));
    for (int k = 1; k < 5; ++k) step.push_back(uniform_frame(1.0, k));
    // y_0 = x_0 = 0, then 1 - 0.5^k
    const Trace y = lowpass(step, 0.5);
    CHECK(y[3].values[7] == doctest::Approx(0.875));
    CHECK(y[4].values[7] == doctest::Approx(0.9375));

    Trace unit(4, uniform_frame(1.0));
    CHECK(lowpass(unit, 0.5)[3].values[0] == 1.0);

    const Trace same = lowpass(step, 1.0);
    for (std::size_t k = 0; k < step.size(); ++k) CHECK(same[k].values == step[k].values);

    Trace c(50, uniform_frame(2.3));
    for (const auto& f : lowpass(c, 0.07)) CHECK(f.values[11] == doctest::Approx(2.3).epsilon(1e-15));
    CHECK_THROWS_AS(Ema(0.0), Error);
    CHECK_THROWS_AS(Ema(1.5), Error);
}

TEST_CASE("property: lowpass output stays inside the input range") {
    const CounterRng r(3, "test/lowpass");
    Trace x;
    for (int k = 0; k < 400; ++k) {
        TactileFrame f;
        for (int i = 0; i < kTaxels; ++i) f.values[i] = r.uniform(k, i, 0.0, 5.0);
        x.push_back(f);
    }
    const Trace y = lowpass(x, 0.13);
    for (int i = 0; i < kTaxels; ++i) {
        double lo = 1e9, hi = -1e9;
        for (const auto& f : x) {
            lo = std::min(lo, f.values[i]);
            hi = std::max(hi, f.values[i]);
        }
        for (const auto& f : y) {
            CHECK(f.values[i] >= lo);
            CHECK(f.values[i] <= hi);
        }
    }
}

TEST_CASE("aggregate force") {
    CHECK(aggregate_force(TactileFrame{}) == 0.0);
    TactileFrame one;
    one.at(1, 2, 3) = 2.5;
    CHECK(aggregate_force(one) == 2.5);
    CHECK(aggregate_force(uniform_frame(0.1)) == doctest::Approx(4.8).epsilon(1e-14));
    CHECK(mean_force(uniform_frame(0.1)) == doctest::Approx(0.1));

    const CounterRng r(9, "test/agg");
    for (int k = 0; k < 100; ++k) {
        TactileFrame a, b, s;
        for (int i = 0; i < kTaxels; ++i) {
            a.values[i] = r.uniform(k, i);
            b.values[i] = r.uniform(k, 100 + i);
            s.values[i] = a.values[i] + b.values[i];
        }
        CHECK(aggregate_force(s) == doctest::Approx(aggregate_force(a) + aggregate_force(b)).epsilon(1e-13));
    }
}

TEST_CASE("calibration map clamps and scales") {
    CalibrationMap m;
    m.gain.fill(2.0);
    m.offset.fill(0.5);
    TactileFrame raw = uniform_frame(1.0);
    raw.values[0] = 0.1;
    const TactileFrame f = m.apply(raw);
    CHECK(f.values[0] == 0.0);
    CHECK(f.values[1] == doctest::Approx(1.0));
}

TEST_CASE("contact patch and distribution") {
    const auto p = contact_patch(1.5, 1.5, 1.0);
    for (int a = 0; a < kArrays; ++a) {
        double s = 0;
        for (int i = 0; i < kTaxelsPerArray; ++i) s += p[a * kTaxelsPerArray + i];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
    // centred patch is symmetric: corner taxels equal, centre taxels largest
    CHECK(p[0] == doctest::Approx(p[15]));
    CHECK(p[5] > p[0]);
    const TactileFrame f = distribute_force(0.0, 3.0, p, {0.0, 0.0, 0.0});
    CHECK(aggregate_force(f) == doctest::Approx(3.0).epsilon(1e-14));
    const TactileFrame g = distribute_force(0.0, 0.3, p, {-1.0, 0.0, 0.0});
    CHECK(aggregate_force(g) == doctest::Approx(0.2).epsilon(1e-14));
    for (double v : g.values) CHECK(v >= 0.0);
}

TEST_CASE("generator determinism and phase structure") {
    TraceSpec s;
    const Trace a = generate_trace(s), b = generate_trace(s);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == static_cast<std::size_t>(std::llround(23.0 * s.sample_rate)));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].values == b[k].values);
    for (const auto& f : a)
        for (double v : f.values) CHECK(v >= 0.0);

    s.noise_sigma = 0.0;
    const Trace quiet = generate_trace(s);
    for (std::size_t k = 0; k < 100; ++k) CHECK(aggregate_force(quiet[k]) == 0.0);
    // stable phase reproduces the stable force exactly
    CHECK(aggregate_force(quiet[300]) == doctest::Approx(s.stable_force).epsilon(1e-12));
}

TEST_CASE("noise-free envelope dips exactly to the injected minimum") {
    TraceSpec s;
    s.noise_sigma = 0.0;
    const Trace t = generate_trace(s);
    const double osc_start = s.pre_grasp_duration + s.ramp_duration + s.stable_duration;
    double lo = 1e9;
    for (const auto& f : t)
        if (f.timestamp >= osc_start) lo = std::min(lo, aggregate_force(f));
    CHECK(std::abs(lo - 1.2) < 1e-9);
    // independent evaluation of the raised-cosine dip at its first trough
    const double trough = osc_start + s.oscillation_period / 2;
    const double dip = s.stable_force - s.oscillation_amplitude;
    CHECK(trace_envelope(s, trough) == doctest::Approx(std::max(s.oscillation_min, dip)));
    CHECK(trace_envelope(s, osc_start) == doctest::Approx(s.stable_force));
    CHECK(trace_envelope(s, 0.5) == 0.0);
    CHECK(trace_envelope(s, 1.5) == doctest::Approx(s.stable_force / 2));
}

TEST_CASE("spec validation") {
    TraceSpec s;
    s.oscillation_min = 4.0;
    CHECK(error_name([&] { generate_trace(s); }) == "InvalidSpec");
    s = TraceSpec{};
    s.stable_duration = 0.0;
    CHECK(error_name([&] { validate_spec(s); }) == "InvalidSpec");
    s = TraceSpec{};
    s.oscillation_amplitude = 1.0;
    CHECK(error_name([&] { validate_spec(s); }) == "InvalidSpec");
}

TEST_CASE("calibration recovers the default trace") {
    const TraceSpec s;
    const SlipThresholdModel m = calibrate_threshold(generate_trace(s));
    CHECK(std::abs(m.f_min - 1.2) <= 0.05);
    CHECK(m.noise_floor >= 0.0);
    CHECK(m.noise_floor < m.f_min);
    CHECK(m.window_start < m.window_end);
    CHECK(m.window_start >= s.pre_grasp_duration + s.ramp_duration);
    CHECK(m.grasp_start >= s.pre_grasp_duration - 0.01);
    CHECK(m.grasp_start < s.pre_grasp_duration + s.ramp_duration);
    CHECK(m.nonzero_mean > m.f_min);
}

TEST_CASE("calibration failures") {
    Trace zeros(2000, uniform_frame(0.0));
    for (std::size_t k = 0; k < zeros.size(); ++k) zeros[k].timestamp = k * 0.01;
    CHECK(error_name([&] { calibrate_threshold(zeros); }) == "NoGraspDetected");

    Trace flat = zeros;
    for (std::size_t k = 100; k < flat.size(); ++k) flat[k] = uniform_frame(3.0 / kTaxels, k * 0.01);
    CHECK(error_name([&] { calibrate_threshold(flat); }) == "NoOscillationDetected");
    CHECK(error_name([&] { calibrate_threshold(Trace(10)); }) == "NoGraspDetected");
}

TEST_CASE("property: recovery within 5% over random specs") {
    for (std::uint64_t i = 0; i < 30; ++i) {
        const TraceSpec s = random_trace_spec(i);
        const SlipThresholdModel m = calibrate_threshold(generate_trace(s));
        CHECK(std::abs(m.f_min - s.oscillation_min) <= 0.05 * s.oscillation_min);
        // grasp start never earlier than the true ramp start minus one frame
        CHECK(m.grasp_start >= s.pre_grasp_duration - 1.0 / s.sample_rate - 1e-12);
    }
}

TEST_CASE("threshold detection boundary") {
    SlipThresholdModel m;
    m.f_min = 1.2;
    CHECK(detect_slip_threshold(1.19, m));
    CHECK_FALSE(detect_slip_threshold(1.2, m));
    CHECK_FALSE(detect_slip_threshold(3.2, m));
    CHECK_FALSE(detect_slip_threshold(0.5, m, false));
    CHECK(detect_slip_threshold(uniform_frame(1.0 / kTaxels), m));
}
