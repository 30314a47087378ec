#pragma once

#include "finray/compliance.hpp"
#include "finray/control.hpp"
#include "finray/kinematics.hpp"
#include "finray/slipnet.hpp"
#include "finray/tactile.hpp"
#include "finray/workspace.hpp"

#include <json.hpp>

#include <string>

namespace finray {

struct WorkspaceDefaults {
    DexterityOptions dexterity;
    double band_lo = 60.0;   // mm
    double band_hi = 80.0;   // mm
    double bin_width = 5.0;  // mm
    double hist_hi = 130.0;  // mm
};

struct ToolConfig {
    LinkageGeometry geometry = default_geometry();
    GripperLayout layout;
    FinRayModel finray;
    ObjectPrimitive object;
    TraceSpec trace;
    CalibrationOptions calibration;
    DatasetSpec dataset;
    TrainConfig train;
    ControlSetup control;
    WorkspaceDefaults workspace;
    std::string catalog_path; // empty: built-in catalog
};

/// Parses and validates; unknown keys and wrong types raise ConfigError
/// before anything else runs.
ToolConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ToolConfig& c);

/// Reads `path`; an empty path falls back to $FINRAY_CONFIG, then defaults.
ToolConfig load_config(const std::string& path);

TraceSpec trace_spec_from_json(const nlohmann::json& j, TraceSpec base = {});
nlohmann::json trace_spec_to_json(const TraceSpec& t);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j, DatasetSpec base = {});

} // namespace finray
