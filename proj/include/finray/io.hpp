#pragma once

#include "finray/control.hpp"
#include "finray/kinematics.hpp"
#include "finray/slipnet.hpp"
#include "finray/tactile.hpp"
#include "finray/workspace.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace finray {

inline constexpr const char* kToolVersion = "0.3.0";

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Minimal CSV: comma separated, no quoting. Header row first.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// traces: timestamp_s, a0t0..a2t15
std::string trace_header();
CsvTable trace_to_csv(const Trace& t);
Trace trace_from_csv(const CsvTable& t);
void write_trace(const std::string& path, const Trace& t);
Trace read_trace(const std::string& path);

// datasets: trace columns plus label
void write_samples(const std::string& path, const std::vector<SlipSample>& s);
std::vector<SlipSample> read_samples(const std::string& path);

// workspace samples: p{1..3}_{x,y,z}, radius, center_{x,y,z}
void write_workspace_samples(const std::string& path, const std::vector<WorkspaceSample>& s);
std::vector<WorkspaceSample> read_workspace_samples(const std::string& path);
void write_histogram(const std::string& path, const RadiusHistogram& h);

void write_linkage_sweep(const std::string& path, const std::vector<FingerState>& s);

std::vector<ObjectCatalogEntry> read_catalog(const std::string& path);
void write_catalog(const std::string& path, const std::vector<ObjectCatalogEntry>& c);
void write_benchmark(const std::string& path, const std::vector<BenchmarkRow>& rows);

nlohmann::json threshold_model_to_json(const SlipThresholdModel& m);
SlipThresholdModel threshold_model_from_json(const nlohmann::json& j);

nlohmann::json gcn_to_json(const GcnParams& p);
GcnParams gcn_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

/// 16-bit grayscale, min-max normalised, row 0 at the top (largest y). A
/// grid with zero range maps every pixel to 32768. Writes `path` and
/// `path` + ".json".
struct HeatmapInfo {
    double min_value = 0.0;
    double max_value = 0.0;
};
HeatmapInfo emit_heatmap(const DensityGrid& grid, const std::string& path);
/// Pixel values of a 16-bit PGM written by emit_heatmap, top row first.
std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct RunManifest {
    std::string command_line;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::map<std::string, std::string> outputs; // file name -> sha256

    void add_output(const std::string& path);
    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

} // namespace finray
