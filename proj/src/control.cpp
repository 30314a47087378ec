#include "finray/control.hpp"

#include "finray/error.hpp"
#include "finray/parallel.hpp"
#include "finray/workspace.hpp"

#include <algorithm>
#include <cmath>

namespace finray {

std::vector<ObjectCatalogEntry> default_catalog() {
    // radius mm, weight g; mu by material: plastic 0.5, cardboard and wood
    // 0.6, produce 0.7, glass 0.4
    return {
        {"Bottle 1", 42, 1015, "bottle", 0.5}, {"Bottle 2", 20, 400, "bottle", 0.5},
        {"Box 1", 30, 380, "box", 0.6},        {"Mango", 35, 300, "produce", 0.7},
        {"Box 2", 26, 260, "box", 0.6},        {"Box 3", 28, 130, "box", 0.6},
        {"Apple", 35, 94, "produce", 0.7},     {"Orange", 33, 82, "produce", 0.7},
        {"Peper", 35, 74, "produce", 0.7},     {"Glasses", 10, 63, "glass", 0.4},
        {"Bottle 3", 5, 16, "bottle", 0.5},    {"potato", 7, 16, "produce", 0.7},
        {"tomato", 10, 14, "produce", 0.7},    {"block", 7, 14, "wood", 0.6},
        {"corn", 4, 6, "produce", 0.7},
    };
}

ObjectCatalogEntry default_cap_object() { return {"Cap", 15, 10, "bottle", 0.5}; }

StepOutput step_plant(const PlantState& state, double grip_command, double task_load, const PlantParams& params,
                      const CounterRng& rng, std::uint64_t step) {
    if (!(grip_command >= 0.0)) throw Error("InvalidArgument", "grip command must be non-negative");
    if (!(state.object.mu > 0.0)) throw Error("InvalidArgument", "friction coefficient must be positive");
    StepOutput out;
    PlantState& s = out.state;
    s = state;
    s.normal_force = grip_command;
    s.tangential_load = task_load;
    s.slipping = s.tangential_load > s.object.mu * s.normal_force;
    s.emitted = s.slipping ? state.emitted * params.slip_decay : params.contact_gain * s.normal_force;

    static const auto patch = contact_patch(1.5, 1.5, 1.0);
    std::array<double, kArrays> eta{};
    const double sigma_a = params.noise_sigma / std::sqrt(static_cast<double>(kArrays));
    if (sigma_a > 0.0)
        for (int a = 0; a < kArrays; ++a) eta[a] = sigma_a * rng.normal(step, a);
    // no contact, no pressure: noise only rides on a loaded skin
    if (s.emitted <= 0.0) eta.fill(0.0);
    out.frame = distribute_force(static_cast<double>(step) / params.sample_rate, s.emitted, patch, eta);
    return out;
}

ThresholdDetector::ThresholdDetector(SlipThresholdModel model, double filter_alpha)
    : model_(model), ema_(filter_alpha) {}

bool ThresholdDetector::update(const TactileFrame& raw) {
    return detect_slip_threshold(ema_.push(raw), model_, true);
}

GcnDetector::GcnDetector(const GcnParams& params, double filter_alpha, int hysteresis, double input_gain)
    : params_(&params), ema_(filter_alpha), hysteresis_(std::max(1, hysteresis)), gain_(input_gain) {}

void GcnDetector::reset() {
    ema_.reset();
    run_ = 0;
}

bool GcnDetector::update(const TactileFrame& raw) {
    TactileFrame f = ema_.push(raw);
    for (double& v : f.values) v *= gain_;
    // class 0 is "below the holding threshold"
    run_ = predict(*params_, f) == 0 ? run_ + 1 : 0;
    return run_ >= hysteresis_;
}

double required_grip(const ObjectCatalogEntry& object, const ControlSetup& setup) {
    if (setup.scenario.kind == ScenarioKind::CapRemoval) return setup.scenario.cap_load / object.mu;
    return object.weight * 1e-3 * setup.plant.gravity / object.mu;
}

TraceSpec calibration_spec(const ObjectCatalogEntry& object, const ControlSetup& setup, std::uint64_t seed) {
    TraceSpec t;
    const double need = required_grip(object, setup);
    t.oscillation_min = need;
    t.stable_force = 2.0 * need;
    t.oscillation_amplitude = 2.0 * (t.stable_force - t.oscillation_min);
    t.noise_sigma = setup.plant.noise_sigma;
    t.sample_rate = setup.plant.sample_rate;
    t.seed = seed;
    return t;
}

namespace {

enum class Tick { Ok, Slip, Detected, Dropped, Budget };

struct Engine {
    const ControlSetup& s;
    SlipDetector& det;
    CounterRng plant_rng;
    PlantState st;
    std::uint64_t k = 0;
    double force_sum = 0.0;
    long force_n = 0;
    int undetected = 0;
    EpisodeResult res;

    Engine(const ControlSetup& setup, SlipDetector& d, const ObjectCatalogEntry& obj, std::uint64_t seed)
        : s(setup), det(d), plant_rng(seed, "control/plant") {
        st.object = obj;
    }

    Tick tick(double grip, double load, bool monitor) {
        if (k >= static_cast<std::uint64_t>(s.scenario.max_steps)) return Tick::Budget;
        const bool was_slipping = st.slipping;
        StepOutput out = step_plant(st, grip, load, s.plant, plant_rng, k);
        st = out.state;
        ++k;
        if (grip > 0.0) {
            force_sum += aggregate_force(out.frame);
            ++force_n;
        }
        if (st.slipping && !was_slipping) ++res.slip_events;
        const bool detected = det.update(out.frame);
        if (s.keep_trace) res.trace.push_back(out.frame);
        if (!monitor) {
            undetected = 0;
            return st.slipping ? Tick::Slip : Tick::Ok;
        }
        if (detected) {
            undetected = 0;
            return Tick::Detected;
        }
        if (st.slipping) return ++undetected >= s.scenario.drop_after ? Tick::Dropped : Tick::Slip;
        undetected = 0;
        return Tick::Ok;
    }

    // closing ramp and settle; false when the budget runs out
    bool close(double grip) {
        const auto& sc = s.scenario;
        for (int i = 1; i <= sc.grasp_steps; ++i)
            if (tick(grip * i / sc.grasp_steps, 0.0, false) == Tick::Budget) return false;
        for (int i = 0; i < sc.settle_steps; ++i)
            if (tick(grip, 0.0, false) == Tick::Budget) return false;
        return true;
    }

    bool regrasp(double& grip) {
        grip = std::min(s.scenario.grip_cap, grip + s.scenario.grip_increment);
        ++res.regrasps;
        for (int i = 0; i < s.scenario.regrasp_steps; ++i)
            if (tick(grip, 0.0, false) == Tick::Budget) return false;
        return true;
    }

    EpisodeResult finish(bool success, const std::string& failure) {
        res.success = success;
        res.failure = failure;
        res.iterations = static_cast<int>(std::max<std::uint64_t>(1, k));
        res.mean_contact_force = force_n ? std::max(0.0, force_sum / force_n) : 0.0;
        res.dropped = failure == "Dropped";
        return std::move(res);
    }
};

} // namespace

EpisodeResult run_episode(const ControlSetup& setup, SlipDetector& detector, const ObjectCatalogEntry& object,
                          std::uint64_t seed) {
    const auto& sc = setup.scenario;
    const CounterRng ep(seed, "control/episode");
    const double factor = 1.0 + sc.load_jitter * ep.uniform(0, 0, -1.0, 1.0);
    Engine e(setup, detector, object, seed);
    double grip = sc.initial_grip;

    if (sc.kind == ScenarioKind::PickHold) {
        const double weight = object.weight * 1e-3 * setup.plant.gravity * factor;
        if (!e.close(grip)) return e.finish(false, "BudgetExceeded");
        int progress = 0, since = 0;
        while (progress < sc.hold_steps) {
            const double load = weight * (1.0 + sc.transport_bump * std::exp(-since / 20.0));
            ++since;
            switch (e.tick(grip, load, true)) {
            case Tick::Budget: return e.finish(false, "BudgetExceeded");
            case Tick::Dropped: return e.finish(false, "Dropped");
            case Tick::Detected:
                if (!e.regrasp(grip)) return e.finish(false, "BudgetExceeded");
                since = 0;
                break;
            case Tick::Ok: ++progress; break;
            case Tick::Slip: break;
            }
        }
        return e.finish(true, "");
    }

    // cap removal: P1 grasp, P2 rotate, P3 reorient and loop, P4 lift-off
    const double cap_load = sc.cap_load * factor;
    while (true) {
        if (!e.close(grip)) return e.finish(false, "BudgetExceeded");
        double pass = 0.0;
        int since = 0;
        while (pass < sc.rotation_per_pass) {
            const double load = cap_load * (1.0 + sc.breakaway * std::exp(-since / sc.breakaway_steps));
            ++since;
            switch (e.tick(grip, load, true)) {
            case Tick::Budget: return e.finish(false, "BudgetExceeded");
            case Tick::Dropped: return e.finish(false, "Dropped");
            case Tick::Detected:
                if (!e.regrasp(grip)) return e.finish(false, "BudgetExceeded");
                since = 0;
                break;
            case Tick::Ok:
                pass += sc.rotation_rate;
                e.st.cap_rotation += sc.rotation_rate;
                break;
            case Tick::Slip: break;
            }
        }
        for (int i = 0; i < sc.reorient_steps; ++i)
            if (e.tick(0.0, 0.0, false) == Tick::Budget) return e.finish(false, "BudgetExceeded");
        if (e.st.cap_rotation >= sc.loosen_threshold) break;
    }
    if (!e.close(grip)) return e.finish(false, "BudgetExceeded");
    const double lift = object.weight * 1e-3 * setup.plant.gravity;
    for (int done = 0; done < sc.lift_steps;) {
        switch (e.tick(grip, lift, true)) {
        case Tick::Budget: return e.finish(false, "BudgetExceeded");
        case Tick::Dropped: return e.finish(false, "Dropped");
        case Tick::Detected:
            if (!e.regrasp(grip)) return e.finish(false, "BudgetExceeded");
            break;
        case Tick::Ok: ++done; break;
        case Tick::Slip: break;
        }
    }
    return e.finish(true, "");
}

void FeasibilityTable::set_support(Mode mode, double lo, double hi) {
    support_[static_cast<int>(mode) - 1] = std::make_pair(lo, hi);
}

void FeasibilityTable::compute(const LinkageGeometry& g, const GripperLayout& layout, std::size_t n,
                               std::uint64_t seed, double tail, int threads) {
    SamplingOptions opts;
    opts.threads = threads;
    for (Mode m : {Mode::Parallel, Mode::Trigonal, Mode::TShaped}) {
        const WorkspaceRun run = sample_workspace(g, layout, m, n, seed, opts);
        std::vector<double> r;
        r.reserve(run.samples.size());
        for (const auto& s : run.samples) r.push_back(s.circumradius);
        set_support(m, quantile(r, tail), quantile(r, 1.0 - tail));
    }
}

std::pair<double, double> FeasibilityTable::support(Mode mode) const {
    const auto& s = support_[static_cast<int>(mode) - 1];
    if (!s) throw Error("WorkspaceNotComputed", "no workspace support cached for this mode");
    return *s;
}

bool FeasibilityTable::feasible(double radius, Mode mode) const {
    if (!(radius > 0.0)) throw Error("InvalidArgument", "radius must be positive");
    const auto [lo, hi] = support(mode);
    return radius >= lo && radius <= hi;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec, const ControlSetup& setup,
                                        const FeasibilityTable& feasibility, const GcnParams* gcn,
                                        double gcn_reference_force) {
    if (spec.episodes_per_cell < 1) throw Error("InvalidArgument", "episodes_per_cell must be >= 1");
    const std::size_t no = spec.objects.size(), nc = spec.controllers.size(), nm = spec.modes.size();
    for (auto c : spec.controllers)
        if (c == ControllerKind::Gcn && !gcn) throw Error("InvalidArgument", "GCN controller needs a model");

    std::vector<SlipThresholdModel> cal(no);
    parallel_for(no, spec.threads, [&](std::size_t o) {
        cal[o] = calibrate_threshold(generate_trace(calibration_spec(spec.objects[o], setup, spec.seed)));
    });

    const std::size_t ne = spec.episodes_per_cell;
    std::vector<EpisodeResult> results(no * nc * nm * ne);
    parallel_for(results.size(), spec.threads, [&](std::size_t idx) {
        const std::size_t e = idx % ne, m = (idx / ne) % nm, c = (idx / ne / nm) % nc, o = idx / ne / nm / nc;
        const auto& obj = spec.objects[o];
        EpisodeResult& r = results[idx];
        if (!feasibility.feasible(obj.radius, spec.modes[m])) {
            r.iterations = 1;
            r.infeasible = true;
            r.failure = "Infeasible";
            return;
        }
        // episode seed excludes the controller so both face the same plant
        const std::uint64_t seed = splitmix64(spec.seed ^ splitmix64(o * 1000003ULL + m * 7919ULL + e));
        if (spec.controllers[c] == ControllerKind::Threshold) {
            ThresholdDetector d(cal[o], setup.detector.filter_alpha);
            r = run_episode(setup, d, obj, seed);
        } else {
            GcnDetector d(*gcn, setup.detector.filter_alpha, setup.detector.hysteresis,
                          gcn_reference_force / cal[o].f_min);
            r = run_episode(setup, d, obj, seed);
        }
        r.trace.clear();
    });

    std::vector<BenchmarkRow> rows;
    for (std::size_t o = 0; o < no; ++o)
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t m = 0; m < nm; ++m) {
                BenchmarkRow row;
                row.object = spec.objects[o].name;
                row.controller = spec.controllers[c];
                row.mode = spec.modes[m];
                row.episodes = static_cast<int>(ne);
                double it = 0, f = 0;
                for (std::size_t e = 0; e < ne; ++e) {
                    const auto& r = results[((o * nc + c) * nm + m) * ne + e];
                    row.successes += r.success;
                    it += r.iterations;
                    f += r.mean_contact_force;
                }
                row.success_rate = static_cast<double>(row.successes) / ne;
                row.mean_iterations = it / ne;
                row.mean_contact_force = f / ne;
                rows.push_back(row);
            }
    return rows;
}

double overall_success(const std::vector<BenchmarkRow>& rows, ControllerKind controller) {
    std::vector<std::string> order;
    std::vector<double> best;
    for (const auto& r : rows) {
        if (r.controller != controller) continue;
        auto it = std::find(order.begin(), order.end(), r.object);
        if (it == order.end()) {
            order.push_back(r.object);
            best.push_back(r.success_rate);
        } else {
            auto& b = best[it - order.begin()];
            b = std::max(b, r.success_rate);
        }
    }
    if (best.empty()) return 0.0;
    double s = 0.0;
    for (double b : best) s += b;
    return s / best.size();
}

std::string to_string(ControllerKind k) { return k == ControllerKind::Threshold ? "threshold" : "gcn"; }

std::string to_string(CapPhase p) {
    switch (p) {
    case CapPhase::P1Grasp: return "P1";
    case CapPhase::P2Rotate: return "P2";
    case CapPhase::P3Reorient: return "P3";
    case CapPhase::P4LiftOff: return "P4";
    }
    return "?";
}

} // namespace finray
