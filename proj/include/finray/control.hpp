#pragma once

#include "finray/kinematics.hpp"
#include "finray/rng.hpp"
#include "finray/slipnet.hpp"
#include "finray/tactile.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace finray {

struct ObjectCatalogEntry {
    std::string name;
    double radius = 0.0; // mm
    double weight = 0.0; // g
    std::string shape;
    double mu = 0.5;
};

/// Benchmark object set, with friction coefficients assigned by
/// material class.
std::vector<ObjectCatalogEntry> default_catalog();

/// Bottle whose cap is twisted off in the cap-removal scenario.
ObjectCatalogEntry default_cap_object();

struct PlantParams {
    double gravity = 9.81;       // m/s^2
    double contact_gain = 1.0;   // emitted aggregate per newton of grip
    double noise_sigma = 0.05;   // N, aggregate
    double slip_decay = 0.85;    // per step while slipping
    double sample_rate = 100.0;  // Hz
};

struct PlantState {
    ObjectCatalogEntry object;
    double normal_force = 0.0;
    double tangential_load = 0.0;
    bool slipping = false;
    double cap_rotation = 0.0;
    // aggregate force the skin currently reports, before noise
    double emitted = 0.0;
};

struct StepOutput {
    PlantState state;
    TactileFrame frame;
};

/// One plant tick. Noise is drawn from (rng, step) only, so the trajectory
/// depends on the grip commands and nothing else.
StepOutput step_plant(const PlantState& state, double grip_command, double task_load, const PlantParams& params,
                      const CounterRng& rng, std::uint64_t step);

enum class ControllerKind { Threshold, Gcn };
enum class ScenarioKind { PickHold, CapRemoval };
enum class CapPhase { P1Grasp, P2Rotate, P3Reorient, P4LiftOff };

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::PickHold;
    double initial_grip = 1.0;       // N
    double grip_increment = 0.5;     // N per slip event
    double grip_cap = 20.0;          // N
    int grasp_steps = 20;            // closing ramp
    int settle_steps = 10;           // unmonitored hold after closing
    int regrasp_steps = 10;          // servo pause after a detection
    int drop_after = 15;             // undetected slipping steps before the object falls
    int max_steps = 2500;
    // PickHold
    int hold_steps = 300;
    double load_jitter = 0.1;        // relative, drawn once per episode
    double transport_bump = 0.25;    // relative load surge while lifting
    // CapRemoval
    double cap_load = 0.6;           // N tangential while twisting
    double breakaway = 0.6;          // relative extra load at the start of each pass
    double breakaway_steps = 15.0;   // decay constant of that surge, steps
    double rotation_rate = 0.02;     // rad per step
    double rotation_per_pass = 1.5707963267948966;
    double loosen_threshold = 12.566370614359172;
    int reorient_steps = 30;
    int lift_steps = 50;
};

struct DetectorParams {
    double filter_alpha = 0.2;
    int hysteresis = 2; // consecutive slip frames for the GCN controller
};

/// Online slip signal fed with raw frames.
class SlipDetector {
public:
    virtual ~SlipDetector() = default;
    virtual bool update(const TactileFrame& raw) = 0;
    virtual void reset() = 0;
};

class ThresholdDetector : public SlipDetector {
public:
    ThresholdDetector(SlipThresholdModel model, double filter_alpha);
    bool update(const TactileFrame& raw) override;
    void reset() override { ema_.reset(); }

private:
    SlipThresholdModel model_;
    Ema ema_;
};

/// Class 0 (below the learned threshold) is read as slip. input_gain rescales
/// frames so objects with a different holding force map onto the trained
/// range.
class GcnDetector : public SlipDetector {
public:
    GcnDetector(const GcnParams& params, double filter_alpha, int hysteresis, double input_gain = 1.0);
    bool update(const TactileFrame& raw) override;
    void reset() override;

private:
    const GcnParams* params_;
    Ema ema_;
    int hysteresis_;
    double gain_;
    int run_ = 0;
};

struct EpisodeResult {
    bool success = false;
    int iterations = 0;
    double mean_contact_force = 0.0;
    int slip_events = 0;
    int regrasps = 0;
    bool dropped = false;
    bool infeasible = false;
    std::string failure;
    Trace trace; // filled when requested
};

struct ControlSetup {
    PlantParams plant;
    ScenarioSpec scenario;
    DetectorParams detector;
    bool keep_trace = false;
};

/// Runs one episode. The detector must be fresh or reset.
EpisodeResult run_episode(const ControlSetup& setup, SlipDetector& detector, const ObjectCatalogEntry& object,
                          std::uint64_t seed);

/// Holding force the plant needs for an object under the nominal load.
double required_grip(const ObjectCatalogEntry& object, const ControlSetup& setup);

/// Calibration trace spec for an object: a gradual-release trace whose
/// oscillation dips to the object's required grip.
TraceSpec calibration_spec(const ObjectCatalogEntry& object, const ControlSetup& setup, std::uint64_t seed);

/// Workspace-backed reachability: a radius is feasible in a mode if it lies
/// inside the central support of that mode's circumradius distribution.
class FeasibilityTable {
public:
    FeasibilityTable() = default;
    void set_support(Mode mode, double lo, double hi);
    void compute(const LinkageGeometry& g, const GripperLayout& layout, std::size_t n, std::uint64_t seed,
                 double tail = 0.002, int threads = 1);
    bool feasible(double radius, Mode mode) const;
    std::pair<double, double> support(Mode mode) const;
    bool has(Mode mode) const { return support_[static_cast<int>(mode) - 1].has_value(); }

private:
    std::array<std::optional<std::pair<double, double>>, 3> support_;
};

struct BenchmarkRow {
    std::string object;
    ControllerKind controller = ControllerKind::Threshold;
    Mode mode = Mode::Parallel;
    int episodes = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_iterations = 0.0;
    double mean_contact_force = 0.0;
};

struct BenchmarkSpec {
    std::vector<ObjectCatalogEntry> objects;
    std::vector<ControllerKind> controllers;
    std::vector<Mode> modes = {Mode::Parallel, Mode::Trigonal, Mode::TShaped};
    int episodes_per_cell = 10;
    std::uint64_t seed = 1;
    int threads = 1;
};

/// Per (object, controller, mode) cell. Objects outside a mode's feasible
/// radius range fail without running the plant.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec, const ControlSetup& setup,
                                        const FeasibilityTable& feasibility, const GcnParams* gcn,
                                        double gcn_reference_force);

/// Mean over objects of the best mode's success rate for one controller.
double overall_success(const std::vector<BenchmarkRow>& rows, ControllerKind controller);

std::string to_string(ControllerKind k);
std::string to_string(CapPhase p);

} // namespace finray
