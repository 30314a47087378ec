#include "finray/config.hpp"

#include "finray/error.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

using nlohmann::json;

namespace finray {

namespace {

// Reads fields named by a visitor out of one JSON object; remembers which
// keys were consumed so leftovers can be reported.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    void operator()(const char* key, double& v) {
        if (const json* x = take(key)) {
            if (!x->is_number()) fail(key, "expected a number");
            v = x->get<double>();
        }
    }
    void operator()(const char* key, int& v) {
        if (const json* x = take(key)) {
            if (!x->is_number_integer()) fail(key, "expected an integer");
            v = x->get<int>();
        }
    }
    void operator()(const char* key, std::uint64_t& v) {
        if (const json* x = take(key)) {
            if (!x->is_number_unsigned()) fail(key, "expected a non-negative integer");
            v = x->get<std::uint64_t>();
        }
    }
    void operator()(const char* key, bool& v) {
        if (const json* x = take(key)) {
            if (!x->is_boolean()) fail(key, "expected a boolean");
            v = x->get<bool>();
        }
    }
    void operator()(const char* key, std::string& v) {
        if (const json* x = take(key)) {
            if (!x->is_string()) fail(key, "expected a string");
            v = x->get<std::string>();
        }
    }
    void operator()(const char* key, std::vector<int>& v) {
        if (const json* x = take(key)) {
            if (!x->is_array()) fail(key, "expected an array of integers");
            v.clear();
            for (const auto& e : *x) {
                if (!e.is_number_integer()) fail(key, "expected an array of integers");
                v.push_back(e.get<int>());
            }
        }
    }
    void operator()(const char* key, std::array<double, 3>& v) {
        if (const json* x = take(key)) {
            if (!x->is_array() || x->size() != 3) fail(key, "expected an array of 3 numbers");
            for (int i = 0; i < 3; ++i) {
                if (!(*x)[i].is_number()) fail(key, "expected an array of 3 numbers");
                v[i] = (*x)[i].get<double>();
            }
        }
    }
    void operator()(const char* key, Eigen::Vector2d& v) {
        if (const json* x = take(key)) {
            if (!x->is_array() || x->size() != 2 || !(*x)[0].is_number() || !(*x)[1].is_number())
                fail(key, "expected [x, y]");
            v = Eigen::Vector2d((*x)[0].get<double>(), (*x)[1].get<double>());
        }
    }
    void operator()(const char* key, Shape& v) {
        std::string s;
        if (!j_.contains(key)) return;
        (*this)(key, s);
        if (s == "circle" || s == "sphere") v = Shape::Circle;
        else if (s == "square" || s == "cube") v = Shape::Square;
        else if (s == "rectangle" || s == "cylinder") v = Shape::Rectangle;
        else fail(key, "unknown shape '" + s + "'");
    }
    void operator()(const char* key, ScenarioKind& v) {
        std::string s;
        if (!j_.contains(key)) return;
        (*this)(key, s);
        if (s == "pick-hold") v = ScenarioKind::PickHold;
        else if (s == "cap-removal") v = ScenarioKind::CapRemoval;
        else fail(key, "unknown scenario '" + s + "'");
    }

    template <class T, class Visit>
    void section(const char* key, T& value, Visit visit) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        Reader sub(j_.at(key), path_.empty() ? key : path_ + "." + key);
        visit(sub, value);
        sub.finish();
    }

    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) fail(k, "unknown key");
    }

private:
    const json* take(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::string where = path_.empty() || key == path_ ? key : path_ + "." + key;
        throw Error("ConfigError", where + ": " + what);
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    json j = json::object();

    template <class T>
    void operator()(const char* key, const T& v) { j[key] = v; }
    void operator()(const char* key, const Eigen::Vector2d& v) { j[key] = {v.x(), v.y()}; }
    void operator()(const char* key, Shape v) {
        j[key] = v == Shape::Circle ? "circle" : v == Shape::Square ? "square" : "rectangle";
    }
    void operator()(const char* key, ScenarioKind v) {
        j[key] = v == ScenarioKind::PickHold ? "pick-hold" : "cap-removal";
    }

    template <class T, class Visit>
    void section(const char* key, T& value, Visit visit) {
        Writer sub;
        visit(sub, value);
        j[key] = std::move(sub.j);
    }
};

template <class V> void visit_geometry(V& v, LinkageGeometry& g) {
    v("ground_link", g.ground_link);
    v("crank_link", g.crank_link);
    v("coupler_link", g.coupler_link);
    v("follower_link", g.follower_link);
    v("pivot_radius_1", g.pivot_radius_1);
    v("pivot_radius_2", g.pivot_radius_2);
    v("y_min", g.y_min);
    v("y_max", g.y_max);
    v("finger_length", g.finger_length);
    v("crank_phase", g.crank_phase);
    v("theta_offset", g.theta_offset);
}

template <class V> void visit_layout(V& v, GripperLayout& l) {
    v("palm_radius", l.palm_radius);
    v("preset", l.preset);
    v("spread", l.spread);
    v("pinch_aperture", l.pinch_aperture);
}

template <class V> void visit_finray(V& v, FinRayModel& m) {
    v("n_segments", m.n_segments);
    v("joint_stiffness", m.joint_stiffness);
    v("rib_stiffness", m.rib_stiffness);
    v("rib_count", m.rib_count);
    v("base_width", m.base_width);
    v("height", m.height);
    v("contact_penalty", m.contact_penalty);
    v("axial_stiffness", m.axial_stiffness);
    v("half_gap", m.half_gap);
    v("tip_load", m.tip_load);
    v("max_iterations", m.max_iterations);
    v("tolerance", m.tolerance);
}

template <class V> void visit_object(V& v, ObjectPrimitive& o) {
    v("shape", o.shape);
    v("characteristic_radius", o.characteristic_radius);
    v("center", o.center);
    v("aspect", o.aspect);
}

template <class V> void visit_trace(V& v, TraceSpec& t) {
    v("noise_sigma", t.noise_sigma);
    v("stable_force", t.stable_force);
    v("oscillation_amplitude", t.oscillation_amplitude);
    v("oscillation_min", t.oscillation_min);
    v("oscillation_period", t.oscillation_period);
    v("pre_grasp_duration", t.pre_grasp_duration);
    v("ramp_duration", t.ramp_duration);
    v("stable_duration", t.stable_duration);
    v("oscillation_duration", t.oscillation_duration);
    v("sample_rate", t.sample_rate);
    v("patch_sigma", t.patch_sigma);
    v("patch_row", t.patch_row);
    v("patch_col", t.patch_col);
    v("seed", t.seed);
}

template <class V> void visit_calibration(V& v, CalibrationOptions& c) {
    v("baseline_frames", c.baseline_frames);
    v("consecutive_frames", c.consecutive_frames);
    v("alpha", c.alpha);
    v("variance_window", c.variance_window);
    v("variance_factor", c.variance_factor);
    v("stable_quantile", c.stable_quantile);
    v("variance_floor", c.variance_floor);
    v("quiet_frames", c.quiet_frames);
}

template <class V> void visit_dataset(V& v, DatasetSpec& d) {
    v.section("base", d.base, [](auto& w, TraceSpec& t) { visit_trace(w, t); });
    v("train_size", d.train_size);
    v("test_size", d.test_size);
    v("filter_alpha", d.filter_alpha);
    v("force_jitter", d.force_jitter);
    v("seed", d.seed);
}

template <class V> void visit_train(V& v, TrainConfig& t) {
    v("learning_rate", t.learning_rate);
    v("epochs", t.epochs);
    v("l2_penalty", t.l2_penalty);
    v("momentum", t.momentum);
    v("seed", t.seed);
    v("hidden", t.hidden);
}

template <class V> void visit_control(V& v, ControlSetup& c) {
    v.section("plant", c.plant, [](auto& w, PlantParams& p) {
        w("gravity", p.gravity);
        w("contact_gain", p.contact_gain);
        w("noise_sigma", p.noise_sigma);
        w("slip_decay", p.slip_decay);
        w("sample_rate", p.sample_rate);
    });
    v.section("scenario", c.scenario, [](auto& w, ScenarioSpec& s) {
        w("kind", s.kind);
        w("initial_grip", s.initial_grip);
        w("grip_increment", s.grip_increment);
        w("grip_cap", s.grip_cap);
        w("grasp_steps", s.grasp_steps);
        w("settle_steps", s.settle_steps);
        w("regrasp_steps", s.regrasp_steps);
        w("drop_after", s.drop_after);
        w("max_steps", s.max_steps);
        w("hold_steps", s.hold_steps);
        w("load_jitter", s.load_jitter);
        w("transport_bump", s.transport_bump);
        w("cap_load", s.cap_load);
        w("breakaway", s.breakaway);
        w("breakaway_steps", s.breakaway_steps);
        w("rotation_rate", s.rotation_rate);
        w("rotation_per_pass", s.rotation_per_pass);
        w("loosen_threshold", s.loosen_threshold);
        w("reorient_steps", s.reorient_steps);
        w("lift_steps", s.lift_steps);
    });
    v.section("detector", c.detector, [](auto& w, DetectorParams& d) {
        w("filter_alpha", d.filter_alpha);
        w("hysteresis", d.hysteresis);
    });
}

template <class V> void visit_workspace(V& v, WorkspaceDefaults& w) {
    v("band_lo", w.band_lo);
    v("band_hi", w.band_hi);
    v("bin_width", w.bin_width);
    v("hist_hi", w.hist_hi);
    v("density_quantile", w.dexterity.quantile);
    v("cell", w.dexterity.cell);
    v("bandwidth", w.dexterity.bandwidth);
    v("min_region_fraction", w.dexterity.min_region_fraction);
}

template <class V> void visit_config(V& v, ToolConfig& c) {
    v.section("linkage", c.geometry, [](auto& w, LinkageGeometry& g) { visit_geometry(w, g); });
    v.section("layout", c.layout, [](auto& w, GripperLayout& l) { visit_layout(w, l); });
    v.section("finray", c.finray, [](auto& w, FinRayModel& m) { visit_finray(w, m); });
    v.section("object", c.object, [](auto& w, ObjectPrimitive& o) { visit_object(w, o); });
    v.section("trace", c.trace, [](auto& w, TraceSpec& t) { visit_trace(w, t); });
    v.section("calibration", c.calibration, [](auto& w, CalibrationOptions& o) { visit_calibration(w, o); });
    v.section("dataset", c.dataset, [](auto& w, DatasetSpec& d) { visit_dataset(w, d); });
    v.section("train", c.train, [](auto& w, TrainConfig& t) { visit_train(w, t); });
    v.section("control", c.control, [](auto& w, ControlSetup& s) { visit_control(w, s); });
    v.section("workspace", c.workspace, [](auto& w, WorkspaceDefaults& d) { visit_workspace(w, d); });
    v("catalog_path", c.catalog_path);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error("ConfigError", what);
}

void validate_config(const ToolConfig& c) {
    validate_geometry(c.geometry);
    validate_model(c.finray);
    validate_spec(c.trace);
    validate_spec(c.dataset.base);
    require(c.layout.palm_radius > 0.0, "layout.palm_radius must be positive");
    require(c.layout.pinch_aperture >= 0.0, "layout.pinch_aperture must be non-negative");
    require(c.object.characteristic_radius > 0.0, "object.characteristic_radius must be positive");
    require(c.calibration.alpha > 0.0 && c.calibration.alpha <= 1.0, "calibration.alpha must be in (0, 1]");
    require(c.dataset.train_size > 0 && c.dataset.test_size > 0, "dataset sizes must be positive");
    require(c.train.learning_rate > 0.0, "train.learning_rate must be positive");
    require(c.train.epochs >= 1, "train.epochs must be >= 1");
    require(c.train.hidden.size() == 3, "train.hidden must list 3 layer widths");
    for (int h : c.train.hidden) require(h >= 1, "train.hidden widths must be >= 1");
    require(c.control.plant.noise_sigma >= 0.0, "control.plant.noise_sigma must be non-negative");
    require(c.control.plant.slip_decay >= 0.0 && c.control.plant.slip_decay <= 1.0,
            "control.plant.slip_decay must be in [0, 1]");
    require(c.control.detector.filter_alpha > 0.0 && c.control.detector.filter_alpha <= 1.0,
            "control.detector.filter_alpha must be in (0, 1]");
    require(c.control.scenario.grip_cap > 0.0, "control.scenario.grip_cap must be positive");
    require(c.control.scenario.max_steps >= 1, "control.scenario.max_steps must be >= 1");
    require(c.workspace.band_lo < c.workspace.band_hi, "workspace band requires band_lo < band_hi");
    require(c.workspace.bin_width > 0.0, "workspace.bin_width must be positive");
    require(c.workspace.dexterity.cell > 0.0, "workspace.cell must be positive");
}

} // namespace

ToolConfig config_from_json(const json& j) {
    ToolConfig c;
    Reader r(j, "");
    visit_config(r, c);
    r.finish();
    validate_config(c);
    return c;
}

json config_to_json(const ToolConfig& c) {
    Writer w;
    ToolConfig copy = c;
    visit_config(w, copy);
    return w.j;
}

ToolConfig load_config(const std::string& path) {
    std::string p = path;
    if (p.empty())
        if (const char* env = std::getenv("FINRAY_CONFIG")) p = env;
    if (p.empty()) return ToolConfig{};
    std::ifstream in(p);
    if (!in) throw Error("IoFailure", "cannot open config " + p);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("ConfigError", p + ": " + e.what());
    }
    return config_from_json(j);
}

TraceSpec trace_spec_from_json(const json& j, TraceSpec base) {
    Reader r(j, "");
    visit_trace(r, base);
    r.finish();
    validate_spec(base);
    return base;
}

json trace_spec_to_json(const TraceSpec& t) {
    Writer w;
    TraceSpec copy = t;
    visit_trace(w, copy);
    return w.j;
}

DatasetSpec dataset_spec_from_json(const json& j, DatasetSpec base) {
    Reader r(j, "");
    visit_dataset(r, base);
    r.finish();
    validate_spec(base.base);
    return base;
}

} // namespace finray
