#include "finray/tactile.hpp"

#include "finray/error.hpp"
#include "finray/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace finray {

TactileFrame CalibrationMap::apply(const TactileFrame& raw) const {
    TactileFrame f;
    f.timestamp = raw.timestamp;
    for (int i = 0; i < kTaxels; ++i) f.values[i] = std::max(0.0, gain[i] * (raw.values[i] - offset[i]));
    return f;
}

Ema::Ema(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("InvalidArgument", "alpha must lie in (0, 1]");
}

const TactileFrame& Ema::push(const TactileFrame& x) {
    if (!primed_) {
        y_ = x;
        primed_ = true;
        return y_;
    }
    y_.timestamp = x.timestamp;
    for (int i = 0; i < kTaxels; ++i) y_.values[i] = alpha_ * x.values[i] + (1.0 - alpha_) * y_.values[i];
    return y_;
}

Trace lowpass(const Trace& frames, double alpha) {
    Ema ema(alpha);
    Trace out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(ema.push(f));
    return out;
}

double aggregate_force(const TactileFrame& frame) {
    return std::accumulate(frame.values.begin(), frame.values.end(), 0.0);
}

double mean_force(const TactileFrame& frame) { return aggregate_force(frame) / kTaxels; }

std::vector<double> aggregate_series(const Trace& frames) {
    std::vector<double> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(aggregate_force(f));
    return out;
}

void validate_spec(const TraceSpec& s) {
    if (!(s.oscillation_min < s.stable_force)) throw Error("InvalidSpec", "oscillation_min must be below stable_force");
    if (!(s.oscillation_min >= 0.0)) throw Error("InvalidSpec", "oscillation_min must be non-negative");
    if (!(s.oscillation_amplitude >= s.stable_force - s.oscillation_min))
        throw Error("InvalidSpec", "oscillation_amplitude must reach oscillation_min");
    const double d[] = {s.pre_grasp_duration, s.ramp_duration, s.stable_duration, s.oscillation_duration,
                        s.oscillation_period, s.sample_rate, s.patch_sigma};
    for (double v : d)
        if (!(v > 0.0)) throw Error("InvalidSpec", "durations, period, rate and patch width must be positive");
    if (!(s.noise_sigma >= 0.0)) throw Error("InvalidSpec", "noise_sigma must be non-negative");
}

double trace_envelope(const TraceSpec& s, double t) {
    const double t_ramp = s.pre_grasp_duration;
    const double t_stable = t_ramp + s.ramp_duration;
    const double t_osc = t_stable + s.stable_duration;
    if (t < t_ramp) return 0.0;
    if (t < t_stable) return s.stable_force * (t - t_ramp) / s.ramp_duration;
    if (t < t_osc) return s.stable_force;
    const double u = t - t_osc;
    const double dip = 0.5 * s.oscillation_amplitude * (1.0 - std::cos(2.0 * std::numbers::pi * u / s.oscillation_period));
    return std::max(s.oscillation_min, s.stable_force - dip);
}

std::array<double, kTaxels> contact_patch(double center_r, double center_c, double sigma) {
    std::array<double, kTaxels> w{};
    for (int a = 0; a < kArrays; ++a) {
        double sum = 0.0;
        for (int r = 0; r < kRows; ++r)
            for (int c = 0; c < kCols; ++c) {
                const double d2 = (r - center_r) * (r - center_r) + (c - center_c) * (c - center_c);
                const double v = std::exp(-0.5 * d2 / (sigma * sigma));
                w[a * kTaxelsPerArray + r * kCols + c] = v;
                sum += v;
            }
        for (int i = 0; i < kTaxelsPerArray; ++i) w[a * kTaxelsPerArray + i] /= sum;
    }
    return w;
}

TactileFrame distribute_force(double timestamp, double force, const std::array<double, kTaxels>& patch,
                              const std::array<double, kArrays>& eta) {
    TactileFrame f;
    f.timestamp = timestamp;
    for (int a = 0; a < kArrays; ++a) {
        const double share = std::max(0.0, force / kArrays + eta[a]);
        for (int i = 0; i < kTaxelsPerArray; ++i)
            f.values[a * kTaxelsPerArray + i] = patch[a * kTaxelsPerArray + i] * share;
    }
    return f;
}

Trace generate_trace(const TraceSpec& spec) {
    validate_spec(spec);
    const double total = spec.pre_grasp_duration + spec.ramp_duration + spec.stable_duration + spec.oscillation_duration;
    const auto n = static_cast<std::size_t>(std::llround(total * spec.sample_rate));
    const CounterRng rng(spec.seed, "tactile/trace");
    const auto patch = contact_patch(spec.patch_row, spec.patch_col, spec.patch_sigma);
    // common-mode noise per array; three arrays add up to sigma overall
    const double sigma_a = spec.noise_sigma / std::sqrt(static_cast<double>(kArrays));
    Trace out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = k / spec.sample_rate;
        std::array<double, kArrays> eta{};
        if (sigma_a > 0.0)
            for (int a = 0; a < kArrays; ++a) eta[a] = sigma_a * rng.normal(k, a);
        out.push_back(distribute_force(t, trace_envelope(spec, t), patch, eta));
    }
    return out;
}

SlipThresholdModel calibrate_threshold(const Trace& trace, const CalibrationOptions& o) {
    const int n = static_cast<int>(trace.size());
    if (n < o.baseline_frames + o.consecutive_frames)
        throw Error("NoGraspDetected", "trace shorter than the baseline window");
    const std::vector<double> agg = aggregate_series(trace);

    double mean = 0.0;
    for (int k = 0; k < o.baseline_frames; ++k) mean += agg[k];
    mean /= o.baseline_frames;
    double var = 0.0;
    for (int k = 0; k < o.baseline_frames; ++k) var += (agg[k] - mean) * (agg[k] - mean);
    var /= o.baseline_frames;

    SlipThresholdModel m;
    m.noise_floor = mean + 3.0 * std::sqrt(var);

    int gs = -1;
    for (int k = 0, run = 0; k < n; ++k) {
        run = agg[k] > m.noise_floor ? run + 1 : 0;
        if (run >= o.consecutive_frames) {
            gs = k - o.consecutive_frames + 1;
            break;
        }
    }
    if (gs < 0) throw Error("NoGraspDetected", "aggregate force never exceeds the noise floor");
    m.grasp_start = trace[gs].timestamp;

    std::vector<double> f(n);
    f[0] = agg[0];
    for (int k = 1; k < n; ++k) f[k] = o.alpha * agg[k] + (1.0 - o.alpha) * f[k - 1];

    const int w = o.variance_window;
    const int first = gs + w - 1;
    if (first >= n) throw Error("NoOscillationDetected", "trace ends before the first variance window");
    std::vector<double> rv(n, 0.0);
    for (int k = first; k < n; ++k) {
        double mu = 0.0;
        for (int j = k - w + 1; j <= k; ++j) mu += f[j];
        mu /= w;
        double s = 0.0;
        for (int j = k - w + 1; j <= k; ++j) s += (f[j] - mu) * (f[j] - mu);
        rv[k] = s / w;
    }
    const double stable_var =
        std::max(o.variance_floor, [&] {
            std::vector<double> post(rv.begin() + first, rv.end());
            std::sort(post.begin(), post.end());
            const double pos = o.stable_quantile * (post.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            return i + 1 < post.size() ? post[i] + (pos - i) * (post[i + 1] - post[i]) : post.back();
        }());
    const double active_level = o.variance_factor * stable_var;

    int start = -1;
    for (int k = first, run = 0; k < n; ++k) {
        run = rv[k] > active_level ? 0 : run + 1;
        if (run >= o.quiet_frames) {
            start = k;
            break;
        }
    }
    int t0 = -1, t1 = -1;
    if (start >= 0)
        for (int k = start; k < n; ++k)
            if (rv[k] > active_level) {
                if (t0 < 0) t0 = k;
                t1 = k;
            }
    if (t0 < 0 || t1 <= t0) throw Error("NoOscillationDetected", "rolling variance never exceeds the stable level");

    double fmin = 0.0;
    bool any = false;
    for (int k = t0; k <= t1; ++k) {
        if (!(f[k] > m.noise_floor)) continue;
        if (!any || f[k] < fmin) fmin = f[k];
        any = true;
    }
    if (!any) throw Error("NoOscillationDetected", "oscillation window holds no reading above the noise floor");
    m.f_min = fmin;
    m.window_start = trace[t0].timestamp;
    m.window_end = trace[t1].timestamp;

    double sum = 0.0;
    int cnt = 0;
    for (int k = gs; k < n; ++k)
        if (f[k] > m.noise_floor) {
            sum += f[k];
            ++cnt;
        }
    m.nonzero_mean = cnt ? sum / cnt : 0.0;
    return m;
}

bool detect_slip_threshold(double filtered_aggregate, const SlipThresholdModel& model, bool grasping) {
    return grasping && filtered_aggregate < model.f_min;
}

bool detect_slip_threshold(const TactileFrame& filtered, const SlipThresholdModel& model, bool grasping) {
    return detect_slip_threshold(aggregate_force(filtered), model, grasping);
}

} // namespace finray
