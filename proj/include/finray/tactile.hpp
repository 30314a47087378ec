#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace finray {

constexpr int kArrays = 3;
constexpr int kRows = 4;
constexpr int kCols = 4;
constexpr int kTaxelsPerArray = kRows * kCols;
constexpr int kTaxels = kArrays * kTaxelsPerArray;

/// One reading of the three 4x4 arrays, calibrated force per taxel in N.
/// Taxel (a, r, c) lives at index a*16 + r*4 + c.
struct TactileFrame {
    double timestamp = 0.0;
    std::array<double, kTaxels> values{};

    double& at(int a, int r, int c) { return values[a * kTaxelsPerArray + r * kCols + c]; }
    double at(int a, int r, int c) const { return values[a * kTaxelsPerArray + r * kCols + c]; }
};

using Trace = std::vector<TactileFrame>;

/// Raw-to-newton conversion: force = gain * (raw - offset), clamped at 0.
struct CalibrationMap {
    std::array<double, kTaxels> gain;
    std::array<double, kTaxels> offset;

    CalibrationMap() {
        gain.fill(1.0);
        offset.fill(0.0);
    }
    TactileFrame apply(const TactileFrame& raw) const;
};

struct SlipThresholdModel {
    double noise_floor = 0.0;
    double f_min = 0.0;
    double grasp_start = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    // mean of filtered post-grasp readings above the noise floor; reported
    // alongside f_min, not used for detection
    double nonzero_mean = 0.0;
};

struct TraceSpec {
    double noise_sigma = 0.02;
    double stable_force = 3.2;
    // must be at least stable_force - oscillation_min; larger values give the
    // dips a flat bottom at oscillation_min
    double oscillation_amplitude = 4.0;
    double oscillation_min = 1.2;
    double oscillation_period = 6.0;
    double pre_grasp_duration = 1.0;
    double ramp_duration = 1.0;
    double stable_duration = 3.0;
    double oscillation_duration = 18.0;
    double sample_rate = 100.0;
    // contact patch footprint width in taxel pitches
    double patch_sigma = 1.0;
    double patch_row = 1.5;
    double patch_col = 1.5;
    std::uint64_t seed = 1;
};

struct CalibrationOptions {
    int baseline_frames = 50;
    int consecutive_frames = 5;
    double alpha = 0.02;
    int variance_window = 25;
    double variance_factor = 4.0;
    // quantile of post-grasp rolling variance taken as the stable-phase level
    double stable_quantile = 0.1;
    double variance_floor = 1e-8;
    // the window search starts after the first quiet run this long
    int quiet_frames = 50;
};

/// Exponential moving average per taxel; y_0 = x_0.
Trace lowpass(const Trace& frames, double alpha);

/// Streaming form of lowpass.
class Ema {
public:
    explicit Ema(double alpha);
    const TactileFrame& push(const TactileFrame& x);
    const TactileFrame& value() const { return y_; }
    bool primed() const { return primed_; }
    void reset() { primed_ = false; }

private:
    double alpha_;
    bool primed_ = false;
    TactileFrame y_;
};

double aggregate_force(const TactileFrame& frame);
double mean_force(const TactileFrame& frame);
std::vector<double> aggregate_series(const Trace& frames);

void validate_spec(const TraceSpec& spec);

/// Noise-free aggregate force at time t.
double trace_envelope(const TraceSpec& spec, double t);

/// Per-taxel share of one array's force; each array's weights sum to 1.
std::array<double, kTaxels> contact_patch(double center_r, double center_c, double sigma);

/// Splits an aggregate force over the taxels. eta holds the per-array
/// common-mode noise (N); each array carries force/3 + eta, clamped at 0.
TactileFrame distribute_force(double timestamp, double force, const std::array<double, kTaxels>& patch,
                              const std::array<double, kArrays>& eta);

Trace generate_trace(const TraceSpec& spec);

SlipThresholdModel calibrate_threshold(const Trace& trace, const CalibrationOptions& opts = {});

/// Strictly below f_min while grasping; equality is not slip.
bool detect_slip_threshold(double filtered_aggregate, const SlipThresholdModel& model, bool grasping = true);
bool detect_slip_threshold(const TactileFrame& filtered, const SlipThresholdModel& model, bool grasping = true);

} // namespace finray
