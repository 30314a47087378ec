#include "finray/compliance.hpp"
#include "finray/config.hpp"
#include "finray/control.hpp"
#include "finray/error.hpp"
#include "finray/io.hpp"
#include "finray/kinematics.hpp"
#include "finray/slipnet.hpp"
#include "finray/tactile.hpp"
#include "finray/workspace.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace finray;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    int threads = 1;
    std::string manifest;
};

std::string joined_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

RunManifest start_manifest(const std::string& argv, const ToolConfig& cfg, std::uint64_t seed) {
    RunManifest m;
    m.command_line = argv;
    m.config_hash = sha256_hex(config_to_json(cfg).dump());
    m.seed = seed;
    return m;
}

Shape parse_shape(const std::string& s) {
    if (s == "sphere") return Shape::Circle;
    if (s == "cube") return Shape::Square;
    return Shape::Rectangle;
}

Mode parse_mode(int m) { return static_cast<Mode>(m); }

double reference_force(const json& model, const ToolConfig& cfg) {
    if (model.contains("reference_force")) return model.at("reference_force").get<double>();
    return calibrate_threshold(generate_trace(cfg.dataset.base), cfg.calibration).f_min;
}

std::vector<ControllerKind> parse_controllers(const std::string& s) {
    if (s == "threshold") return {ControllerKind::Threshold};
    if (s == "gcn") return {ControllerKind::Gcn};
    return {ControllerKind::Threshold, ControllerKind::Gcn};
}

json episode_json(const EpisodeResult& r) {
    return {{"success", r.success},       {"iterations", r.iterations}, {"mean_contact_force", r.mean_contact_force},
            {"slip_events", r.slip_events}, {"regrasps", r.regrasps},   {"dropped", r.dropped},
            {"failure", r.failure}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fin Ray tactile gripper simulator"};
    app.require_subcommand(1);
    Common common;
    const std::string argv_line = joined_argv(argc, argv);

    auto add_common = [&](CLI::App* sub, bool with_threads) {
        sub->add_option("--config", common.config, "JSON config (falls back to $FINRAY_CONFIG)");
        sub->add_option("--manifest", common.manifest, "run manifest path");
        if (with_threads) sub->add_option("--threads", common.threads, "worker threads")->check(CLI::Range(1, 256));
    };

    // fit-linkage
    auto* fit = app.add_subcommand("fit-linkage", "sweep y and fit the y-theta line");
    int fit_samples = 101;
    std::string fit_out;
    add_common(fit, false);
    fit->add_option("--samples", fit_samples, "sweep points")->check(CLI::Range(2, 10000000));
    fit->add_option("--out", fit_out, "CSV with y_mm, theta_rad")->required();

    // compliance
    auto* comp = app.add_subcommand("compliance", "quasi-static Fin Ray contact solve");
    std::string comp_shape = "sphere", comp_out;
    double comp_actuation = 0.35;
    int comp_steps = 10;
    add_common(comp, false);
    comp->add_option("--shape", comp_shape, "object shape")->check(CLI::IsMember({"sphere", "cube", "cylinder"}));
    comp->add_option("--actuation", comp_actuation, "final actuation, rad");
    comp->add_option("--steps", comp_steps, "actuation increments")->check(CLI::Range(1, 10000));
    comp->add_option("--out", comp_out, "CSV per step")->required();

    // workspace
    auto* ws = app.add_subcommand("workspace", "Monte Carlo workspace and dexterity map");
    int ws_mode = 2;
    std::size_t ws_n = 100000;
    std::uint64_t ws_seed = 1;
    std::vector<double> ws_band;
    std::string ws_dir;
    add_common(ws, true);
    ws->add_option("--mode", ws_mode, "1 parallel, 2 trigonal, 3 T-shaped")->check(CLI::Range(1, 3));
    ws->add_option("-n", ws_n, "samples")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    ws->add_option("--seed", ws_seed, "seed");
    ws->add_option("--band", ws_band, "radius band lo,hi in mm")->delimiter(',')->expected(2);
    ws->add_option("--out-dir", ws_dir, "output directory")->required();

    // gen-trace
    auto* gt = app.add_subcommand("gen-trace", "synthetic gradual-release tactile trace");
    std::string gt_spec, gt_out;
    std::uint64_t gt_seed = 0;
    add_common(gt, false);
    gt->add_option("--spec", gt_spec, "TraceSpec JSON");
    auto* gt_seed_opt = gt->add_option("--seed", gt_seed, "overrides the spec seed");
    gt->add_option("--out", gt_out, "trace CSV")->required();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "recover the slip threshold from a trace");
    std::string cal_trace, cal_out;
    add_common(cal, false);
    cal->add_option("--trace", cal_trace, "trace CSV")->required()->check(CLI::ExistingFile);
    cal->add_option("--out", cal_out, "model JSON")->required();

    // gen-data
    auto* gd = app.add_subcommand("gen-data", "labelled slip dataset");
    std::string gd_spec, gd_dir;
    int gd_train = 2100, gd_test = 700;
    std::uint64_t gd_seed = 1;
    add_common(gd, false);
    gd->add_option("--spec", gd_spec, "DatasetSpec JSON");
    auto* gd_train_opt = gd->add_option("--train", gd_train, "training samples")->check(CLI::Range(2, 10000000));
    auto* gd_test_opt = gd->add_option("--test", gd_test, "test samples")->check(CLI::Range(2, 10000000));
    auto* gd_seed_opt = gd->add_option("--seed", gd_seed, "seed");
    gd->add_option("--out-dir", gd_dir, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the slip GCN");
    std::string tr_data, tr_out;
    int tr_epochs = 0;
    std::uint64_t tr_seed = 0;
    add_common(tr, true);
    tr->add_option("--data", tr_data, "dataset directory from gen-data")->required();
    auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "overrides the config")->check(CLI::Range(1, 1000000));
    auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "initialisation seed");
    tr->add_option("--out", tr_out, "model JSON")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "accuracy of a trained model");
    std::string ev_model, ev_data, ev_out;
    add_common(ev, false);
    ev->add_option("--model", ev_model, "model JSON")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data, "labelled CSV")->required()->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out, "metrics JSON");

    // bench
    auto* bn = app.add_subcommand("bench", "controller benchmark over an object catalog");
    std::string bn_catalog, bn_controller = "both", bn_model, bn_out, bn_scenario = "pick-hold";
    int bn_episodes = 10;
    std::uint64_t bn_seed = 1;
    std::size_t bn_ws = 100000;
    add_common(bn, true);
    bn->add_option("--catalog", bn_catalog, "object catalog CSV (default: built-in)");
    bn->add_option("--controller", bn_controller)->check(CLI::IsMember({"threshold", "gcn", "both"}));
    bn->add_option("--model", bn_model, "GCN model JSON");
    bn->add_option("--episodes", bn_episodes, "episodes per cell")->check(CLI::Range(1, 1000000));
    bn->add_option("--seed", bn_seed, "seed");
    bn->add_option("--scenario", bn_scenario)->check(CLI::IsMember({"pick-hold", "cap-removal"}));
    bn->add_option("--workspace-samples", bn_ws, "samples per mode for feasibility")
        ->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    bn->add_option("--out", bn_out, "results CSV")->required();

    // scenario
    auto* sc = app.add_subcommand("scenario", "single scripted episode");
    std::string sc_kind, sc_controller = "gcn", sc_model, sc_out, sc_trace;
    std::uint64_t sc_seed = 1;
    add_common(sc, false);
    sc->add_option("kind", sc_kind, "scenario")->required()->check(CLI::IsMember({"cap-removal", "pick-hold"}));
    sc->add_option("--controller", sc_controller)->check(CLI::IsMember({"threshold", "gcn"}));
    sc->add_option("--model", sc_model, "GCN model JSON");
    sc->add_option("--seed", sc_seed, "seed");
    sc->add_option("--trace", sc_trace, "also write the tactile trace CSV");
    sc->add_option("--out", sc_out, "episode JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ToolConfig cfg = load_config(common.config);
        auto finish = [&](RunManifest& m) {
            if (!common.manifest.empty()) m.write(common.manifest);
        };

        if (*fit) {
            const auto sweep_pts = sweep(cfg.geometry, fit_samples);
            write_linkage_sweep(fit_out, sweep_pts);
            std::vector<double> y, t;
            for (const auto& s : sweep_pts) {
                y.push_back(s.y);
                t.push_back(s.theta);
            }
            const LinearFit f = least_squares(y, t);
            std::printf("slope %.9g rad/mm intercept %.9g rad r2 %.9g\n", f.slope, f.intercept, f.r_squared);
            RunManifest m = start_manifest(argv_line, cfg, 0);
            m.add_output(fit_out);
            finish(m);
        } else if (*comp) {
            ObjectPrimitive obj = cfg.object;
            obj.shape = parse_shape(comp_shape);
            std::vector<double> schedule;
            for (int k = 1; k <= comp_steps; ++k) schedule.push_back(comp_actuation * k / comp_steps);
            const auto profile = contact_force_profile(cfg.finray, obj, schedule);
            CsvTable t;
            t.header = {"step", "actuation_rad", "deformation_mm", "force_N", "contact_points", "max_penetration_mm"};
            for (std::size_t k = 0; k < profile.size(); ++k)
                t.rows.push_back({std::to_string(k + 1), format_double(schedule[k]),
                                  format_double(profile[k].max_deformation),
                                  format_double(profile[k].total_contact_force),
                                  std::to_string(profile[k].contact_point_count),
                                  format_double(profile[k].max_penetration)});
            write_csv(comp_out, t);
            std::printf("deformation %.6g mm force %.6g N\n", profile.back().max_deformation,
                        profile.back().total_contact_force);
            RunManifest m = start_manifest(argv_line, cfg, 0);
            m.add_output(comp_out);
            finish(m);
        } else if (*ws) {
            const double lo = ws_band.empty() ? cfg.workspace.band_lo : ws_band[0];
            const double hi = ws_band.empty() ? cfg.workspace.band_hi : ws_band[1];
            SamplingOptions so;
            so.threads = common.threads;
            const Mode mode = parse_mode(ws_mode);
            const WorkspaceRun run = sample_workspace(cfg.geometry, cfg.layout, mode, ws_n, ws_seed, so);
            fs::create_directories(ws_dir);
            const std::string samples = (fs::path(ws_dir) / "samples.csv").string();
            const std::string hist = (fs::path(ws_dir) / "histogram.csv").string();
            const std::string pgm = (fs::path(ws_dir) / "density.pgm").string();
            const std::string summary = (fs::path(ws_dir) / "summary.json").string();
            write_workspace_samples(samples, run.samples);
            write_histogram(hist, radius_histogram(run.samples, cfg.workspace.bin_width, mode, 0.0,
                                                   cfg.workspace.hist_hi));
            DexterityOptions dopt = cfg.workspace.dexterity;
            dopt.threads = common.threads;
            const DexterityMap dm = dexterity_map(run.samples, lo, hi, dopt);
            emit_heatmap(dm.grid, pgm);
            write_json(summary, {{"mode", ws_mode},
                                 {"accepted", run.samples.size()},
                                 {"skipped_degenerate", run.skipped_degenerate},
                                 {"skipped_aperture", run.skipped_aperture},
                                 {"band", {lo, hi}},
                                 {"band_samples", dm.centers.size()},
                                 {"bandwidth", dm.grid.bandwidth},
                                 {"region_count", dm.region_count},
                                 {"delta_x_max", translation_range(dm)}});
            std::printf("accepted %zu region_count %d delta_x_max %.3f mm\n", run.samples.size(), dm.region_count,
                        translation_range(dm));
            RunManifest m = start_manifest(argv_line, cfg, ws_seed);
            for (const auto& p : {samples, hist, pgm, pgm + ".json", summary}) m.add_output(p);
            if (common.manifest.empty()) m.write((fs::path(ws_dir) / "manifest.json").string());
            finish(m);
        } else if (*gt) {
            TraceSpec spec = gt_spec.empty() ? cfg.trace : trace_spec_from_json(read_json(gt_spec), cfg.trace);
            if (*gt_seed_opt) spec.seed = gt_seed;
            write_trace(gt_out, generate_trace(spec));
            RunManifest m = start_manifest(argv_line, cfg, spec.seed);
            m.add_output(gt_out);
            finish(m);
        } else if (*cal) {
            const SlipThresholdModel model = calibrate_threshold(read_trace(cal_trace), cfg.calibration);
            write_json(cal_out, threshold_model_to_json(model));
            std::printf("f_min %.6g N noise_floor %.6g N\n", model.f_min, model.noise_floor);
            RunManifest m = start_manifest(argv_line, cfg, 0);
            m.add_output(cal_out);
            finish(m);
        } else if (*gd) {
            DatasetSpec spec = gd_spec.empty() ? cfg.dataset : dataset_spec_from_json(read_json(gd_spec), cfg.dataset);
            if (*gd_train_opt) spec.train_size = gd_train;
            if (*gd_test_opt) spec.test_size = gd_test;
            if (*gd_seed_opt) spec.seed = gd_seed;
            SlipThresholdModel calib;
            const SlipDataset d = generate_dataset(spec, &calib);
            fs::create_directories(gd_dir);
            const std::string train_csv = (fs::path(gd_dir) / "train.csv").string();
            const std::string test_csv = (fs::path(gd_dir) / "test.csv").string();
            const std::string cal_json = (fs::path(gd_dir) / "calibration.json").string();
            write_samples(train_csv, d.train);
            write_samples(test_csv, d.test);
            write_json(cal_json, threshold_model_to_json(calib));
            RunManifest m = start_manifest(argv_line, cfg, spec.seed);
            for (const auto& p : {train_csv, test_csv, cal_json}) m.add_output(p);
            if (common.manifest.empty()) m.write((fs::path(gd_dir) / "manifest.json").string());
            finish(m);
        } else if (*tr) {
            TrainConfig tc = cfg.train;
            tc.threads = common.threads;
            if (*tr_epochs_opt) tc.epochs = tr_epochs;
            if (*tr_seed_opt) tc.seed = tr_seed;
            const auto data = read_samples((fs::path(tr_data) / "train.csv").string());
            const TrainResult r = train(data, tc);
            json model = gcn_to_json(r.params);
            const fs::path cal_json = fs::path(tr_data) / "calibration.json";
            if (fs::exists(cal_json)) model["reference_force"] = threshold_model_from_json(read_json(cal_json.string())).f_min;
            model["final_loss"] = r.loss_history.empty() ? 0.0 : r.loss_history.back();
            write_json(tr_out, model);
            std::printf("epochs %d final loss %.6g train accuracy %.4f\n", tc.epochs, r.loss_history.back(),
                        evaluate(r.params, data).accuracy);
            RunManifest m = start_manifest(argv_line, cfg, tc.seed);
            m.add_output(tr_out);
            finish(m);
        } else if (*ev) {
            const GcnParams p = gcn_from_json(read_json(ev_model));
            const Evaluation e = evaluate(p, read_samples(ev_data));
            const json out = {{"accuracy", e.accuracy}, {"confusion", e.confusion}};
            std::printf("accuracy %.4f\n", e.accuracy);
            if (!ev_out.empty()) write_json(ev_out, out);
        } else if (*bn) {
            BenchmarkSpec spec;
            spec.objects = bn_catalog.empty() ? (cfg.catalog_path.empty() ? default_catalog() : read_catalog(cfg.catalog_path))
                                              : read_catalog(bn_catalog);
            spec.controllers = parse_controllers(bn_controller);
            spec.episodes_per_cell = bn_episodes;
            spec.seed = bn_seed;
            spec.threads = common.threads;
            ControlSetup setup = cfg.control;
            setup.scenario.kind = bn_scenario == "cap-removal" ? ScenarioKind::CapRemoval : ScenarioKind::PickHold;
            GcnParams params;
            double ref = 0.0;
            if (bn_controller != "threshold") {
                if (bn_model.empty()) throw Error("MissingModel", "--model is required for the gcn controller");
                const json mj = read_json(bn_model);
                params = gcn_from_json(mj);
                ref = reference_force(mj, cfg);
            }
            FeasibilityTable ft;
            ft.compute(cfg.geometry, cfg.layout, bn_ws, bn_seed, 0.002, common.threads);
            const auto rows = run_benchmark(spec, setup, ft, bn_controller == "threshold" ? nullptr : &params, ref);
            write_benchmark(bn_out, rows);
            for (auto c : spec.controllers)
                std::printf("%s overall success %.4f\n", to_string(c).c_str(), overall_success(rows, c));
            RunManifest m = start_manifest(argv_line, cfg, bn_seed);
            m.add_output(bn_out);
            finish(m);
        } else if (*sc) {
            ControlSetup setup = cfg.control;
            setup.scenario.kind = sc_kind == "cap-removal" ? ScenarioKind::CapRemoval : ScenarioKind::PickHold;
            setup.keep_trace = !sc_trace.empty();
            const ObjectCatalogEntry obj = default_cap_object();
            const SlipThresholdModel objcal =
                calibrate_threshold(generate_trace(calibration_spec(obj, setup, sc_seed)), cfg.calibration);
            EpisodeResult r;
            if (sc_controller == "threshold") {
                ThresholdDetector d(objcal, setup.detector.filter_alpha);
                r = run_episode(setup, d, obj, sc_seed);
            } else {
                if (sc_model.empty()) throw Error("MissingModel", "--model is required for the gcn controller");
                const json mj = read_json(sc_model);
                const GcnParams p = gcn_from_json(mj);
                GcnDetector d(p, setup.detector.filter_alpha, setup.detector.hysteresis,
                              reference_force(mj, cfg) / objcal.f_min);
                r = run_episode(setup, d, obj, sc_seed);
            }
            json out = episode_json(r);
            out["scenario"] = sc_kind;
            out["controller"] = sc_controller;
            out["object"] = obj.name;
            write_json(sc_out, out);
            if (!sc_trace.empty()) write_trace(sc_trace, r.trace);
            std::printf("success %d iterations %d mean force %.4f N\n", r.success, r.iterations, r.mean_contact_force);
            RunManifest m = start_manifest(argv_line, cfg, sc_seed);
            m.add_output(sc_out);
            if (!sc_trace.empty()) m.add_output(sc_trace);
            finish(m);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
