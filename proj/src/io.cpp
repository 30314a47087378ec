#include "finray/io.hpp"

#include "finray/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace finray {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (!s.empty() && *b == '+') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw Error("ParseError", "not a number: '" + s + "'");
    return v;
}

namespace {

int parse_int(const std::string& s) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error("ParseError", "not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("IoFailure", "cannot write " + path);
    return out;
}

void need_columns(const CsvTable& t, const std::vector<std::string>& names, const std::string& what) {
    for (const auto& n : names)
        if (t.column(n) < 0) throw Error("ParseError", what + ": missing column " + n);
}

} // namespace

int CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoFailure", "cannot open " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
            continue;
        }
        if (cells.size() != t.header.size())
            throw Error("ParseError", path + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                                          std::to_string(cells.size()) + " cells, header has " +
                                          std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (first) throw Error("ParseError", path + ": empty file");
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    auto out = open_out(path);
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    if (!out) throw Error("IoFailure", "write failed: " + path);
}

std::string trace_header() {
    std::string h = "timestamp_s";
    for (int a = 0; a < kArrays; ++a)
        for (int k = 0; k < kTaxelsPerArray; ++k) h += ",a" + std::to_string(a) + "t" + std::to_string(k);
    return h;
}

CsvTable trace_to_csv(const Trace& t) {
    CsvTable c;
    c.header = split(trace_header());
    for (const auto& f : t) {
        std::vector<std::string> row;
        row.reserve(kTaxels + 1);
        row.push_back(format_double(f.timestamp));
        for (double v : f.values) row.push_back(format_double(v));
        c.rows.push_back(std::move(row));
    }
    return c;
}

Trace trace_from_csv(const CsvTable& t) {
    const auto cols = split(trace_header());
    need_columns(t, cols, "trace");
    std::vector<int> idx;
    for (const auto& n : cols) idx.push_back(t.column(n));
    Trace out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        TactileFrame f;
        f.timestamp = parse_double(r[idx[0]]);
        for (int k = 0; k < kTaxels; ++k) f.values[k] = parse_double(r[idx[k + 1]]);
        out.push_back(f);
    }
    return out;
}

void write_trace(const std::string& path, const Trace& t) { write_csv(path, trace_to_csv(t)); }
Trace read_trace(const std::string& path) { return trace_from_csv(read_csv(path)); }

void write_samples(const std::string& path, const std::vector<SlipSample>& s) {
    Trace frames;
    frames.reserve(s.size());
    for (const auto& x : s) frames.push_back(x.frame);
    CsvTable c = trace_to_csv(frames);
    c.header.push_back("label");
    for (std::size_t i = 0; i < s.size(); ++i) c.rows[i].push_back(std::to_string(s[i].label));
    write_csv(path, c);
}

std::vector<SlipSample> read_samples(const std::string& path) {
    CsvTable c = read_csv(path);
    const int lc = c.column("label");
    if (lc < 0) throw Error("ParseError", path + ": missing column label");
    const Trace frames = trace_from_csv(c);
    std::vector<SlipSample> out(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out[i].frame = frames[i];
        out[i].label = parse_int(c.rows[i][lc]);
        if (out[i].label != 0 && out[i].label != 1) throw Error("ParseError", path + ": label must be 0 or 1");
    }
    return out;
}

void write_workspace_samples(const std::string& path, const std::vector<WorkspaceSample>& s) {
    CsvTable c;
    for (int p = 1; p <= 3; ++p)
        for (const char* ax : {"x", "y", "z"}) c.header.push_back("p" + std::to_string(p) + "_" + ax);
    c.header.push_back("radius");
    for (const char* ax : {"x", "y", "z"}) c.header.push_back(std::string("center_") + ax);
    for (const auto& x : s) {
        std::vector<std::string> row;
        for (const auto& p : x.contact_points)
            for (int k = 0; k < 3; ++k) row.push_back(format_double(p[k]));
        row.push_back(format_double(x.circumradius));
        for (int k = 0; k < 3; ++k) row.push_back(format_double(x.circumcenter[k]));
        c.rows.push_back(std::move(row));
    }
    write_csv(path, c);
}

std::vector<WorkspaceSample> read_workspace_samples(const std::string& path) {
    CsvTable c = read_csv(path);
    if (c.header.size() != 13 || c.header[9] != "radius")
        throw Error("ParseError", path + ": not a workspace sample file");
    std::vector<WorkspaceSample> out;
    for (const auto& r : c.rows) {
        WorkspaceSample s;
        for (int p = 0; p < 3; ++p)
            for (int k = 0; k < 3; ++k) s.contact_points[p][k] = parse_double(r[p * 3 + k]);
        s.circumradius = parse_double(r[9]);
        for (int k = 0; k < 3; ++k) s.circumcenter[k] = parse_double(r[10 + k]);
        out.push_back(s);
    }
    return out;
}

void write_histogram(const std::string& path, const RadiusHistogram& h) {
    CsvTable c;
    c.header = {"bin_lo_mm", "bin_hi_mm", "count"};
    const std::size_t nb = h.bin_edges.size() - 1;
    c.rows.push_back({"-inf", format_double(h.bin_edges.front()), std::to_string(h.counts.front())});
    for (std::size_t k = 0; k < nb; ++k)
        c.rows.push_back({format_double(h.bin_edges[k]), format_double(h.bin_edges[k + 1]),
                          std::to_string(h.counts[k + 1])});
    c.rows.push_back({format_double(h.bin_edges.back()), "inf", std::to_string(h.counts.back())});
    write_csv(path, c);
}

void write_linkage_sweep(const std::string& path, const std::vector<FingerState>& s) {
    CsvTable c;
    c.header = {"y_mm", "theta_rad"};
    for (const auto& f : s) c.rows.push_back({format_double(f.y), format_double(f.theta)});
    write_csv(path, c);
}

std::vector<ObjectCatalogEntry> read_catalog(const std::string& path) {
    CsvTable c = read_csv(path);
    need_columns(c, {"name", "radius_mm", "weight_g", "shape", "mu"}, "catalog");
    std::vector<ObjectCatalogEntry> out;
    for (const auto& r : c.rows) {
        ObjectCatalogEntry e;
        e.name = r[c.column("name")];
        e.radius = parse_double(r[c.column("radius_mm")]);
        e.weight = parse_double(r[c.column("weight_g")]);
        e.shape = r[c.column("shape")];
        e.mu = parse_double(r[c.column("mu")]);
        if (!(e.radius > 0.0) || !(e.weight > 0.0) || !(e.mu > 0.0))
            throw Error("ParseError", path + ": " + e.name + " needs positive radius, weight and mu");
        out.push_back(e);
    }
    return out;
}

void write_catalog(const std::string& path, const std::vector<ObjectCatalogEntry>& cat) {
    CsvTable c;
    c.header = {"name", "radius_mm", "weight_g", "shape", "mu"};
    for (const auto& e : cat)
        c.rows.push_back({e.name, format_double(e.radius), format_double(e.weight), e.shape, format_double(e.mu)});
    write_csv(path, c);
}

void write_benchmark(const std::string& path, const std::vector<BenchmarkRow>& rows) {
    CsvTable c;
    c.header = {"object", "controller", "mode", "episodes", "successes", "success_rate", "mean_iterations",
                "mean_contact_force_N"};
    for (const auto& r : rows)
        c.rows.push_back({r.object, to_string(r.controller), std::to_string(static_cast<int>(r.mode)),
                          std::to_string(r.episodes), std::to_string(r.successes), format_double(r.success_rate),
                          format_double(r.mean_iterations), format_double(r.mean_contact_force)});
    write_csv(path, c);
}

json threshold_model_to_json(const SlipThresholdModel& m) {
    return {{"noise_floor", m.noise_floor},
            {"f_min", m.f_min},
            {"grasp_start", m.grasp_start},
            {"oscillation_window", {m.window_start, m.window_end}},
            {"nonzero_mean", m.nonzero_mean}};
}

SlipThresholdModel threshold_model_from_json(const json& j) {
    try {
        SlipThresholdModel m;
        m.noise_floor = j.at("noise_floor").get<double>();
        m.f_min = j.at("f_min").get<double>();
        m.grasp_start = j.at("grasp_start").get<double>();
        const auto& w = j.at("oscillation_window");
        if (!w.is_array() || w.size() != 2) throw Error("ParseError", "oscillation_window must be [start, end]");
        m.window_start = w[0].get<double>();
        m.window_end = w[1].get<double>();
        if (j.contains("nonzero_mean")) m.nonzero_mean = j.at("nonzero_mean").get<double>();
        return m;
    } catch (const json::exception& e) {
        throw Error("ParseError", std::string("threshold model: ") + e.what());
    }
}

json gcn_to_json(const GcnParams& p) {
    json w = json::array();
    for (const auto& m : p.weights) {
        std::vector<double> data;
        data.reserve(m.size());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        w.push_back({{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}});
    }
    return {{"dims", p.dims()},
            {"weights", w},
            {"readout", std::vector<double>(p.readout.data(), p.readout.data() + p.readout.size())},
            {"bias", p.bias},
            {"input_scale", p.input_scale}};
}

GcnParams gcn_from_json(const json& j) {
    try {
        GcnParams p;
        const auto dims = j.at("dims").get<std::vector<int>>();
        const auto& w = j.at("weights");
        if (dims.size() != w.size() + 1) throw Error("DimensionMismatch", "dims and weights disagree");
        for (std::size_t l = 0; l < w.size(); ++l) {
            const int rows = w[l].at("rows").get<int>(), cols = w[l].at("cols").get<int>();
            const auto data = w[l].at("data").get<std::vector<double>>();
            if (rows != dims[l] || cols != dims[l + 1] || data.size() != static_cast<std::size_t>(rows) * cols)
                throw Error("DimensionMismatch", "weight " + std::to_string(l + 1) + " has the wrong shape");
            Eigen::MatrixXd m(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r) * cols + c];
            p.weights.push_back(std::move(m));
        }
        const auto ro = j.at("readout").get<std::vector<double>>();
        if (static_cast<int>(ro.size()) != dims.back()) throw Error("DimensionMismatch", "readout length");
        p.readout = Eigen::Map<const Eigen::VectorXd>(ro.data(), static_cast<Eigen::Index>(ro.size()));
        p.bias = j.at("bias").get<double>();
        p.input_scale = j.value("input_scale", 1.0);
        return p;
    } catch (const json::exception& e) {
        throw Error("ParseError", std::string("model: ") + e.what());
    }
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoFailure", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("ParseError", path + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path, true);
    out << text;
    if (!out) throw Error("IoFailure", "write failed: " + path);
}

HeatmapInfo emit_heatmap(const DensityGrid& grid, const std::string& path) {
    if (grid.nx < 1 || grid.ny < 1 || grid.values.size() != static_cast<std::size_t>(grid.nx) * grid.ny)
        throw Error("InvalidArgument", "heatmap grid is empty");
    HeatmapInfo info;
    const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
    info.min_value = *lo;
    info.max_value = *hi;
    const double range = info.max_value - info.min_value;

    std::string bytes = "P5\n" + std::to_string(grid.nx) + " " + std::to_string(grid.ny) + "\n65535\n";
    bytes.reserve(bytes.size() + grid.values.size() * 2);
    for (int row = 0; row < grid.ny; ++row) {
        const int iy = grid.ny - 1 - row;
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double v = grid.values[static_cast<std::size_t>(iy) * grid.nx + ix];
            std::uint16_t px = 32768;
            if (range > 0.0) px = static_cast<std::uint16_t>(std::lround((v - info.min_value) / range * 65535.0));
            bytes.push_back(static_cast<char>(px >> 8));
            bytes.push_back(static_cast<char>(px & 0xff));
        }
    }
    write_text(path, bytes);
    write_json(path + ".json", {{"origin", {grid.origin.x(), grid.origin.y()}},
                                {"cell_size", grid.cell_size},
                                {"nx", grid.nx},
                                {"ny", grid.ny},
                                {"min_value", info.min_value},
                                {"max_value", info.max_value},
                                {"row_order", "top row is the largest y"},
                                {"zero_range_value", 32768}});
    return info;
}

std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoFailure", "cannot open " + path);
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    in.get();
    if (magic != "P5" || maxval != 65535 || width < 1 || height < 1)
        throw Error("ParseError", path + ": not a 16-bit PGM");
    std::vector<std::uint16_t> px(static_cast<std::size_t>(width) * height);
    for (auto& p : px) {
        const int hi = in.get(), lo = in.get();
        if (lo == EOF) throw Error("ParseError", path + ": truncated");
        p = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return px;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw Error("IoFailure", "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoFailure", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

void RunManifest::add_output(const std::string& path) {
    outputs[std::filesystem::path(path).filename().string()] = sha256_file(path);
}

json RunManifest::to_json() const {
    return {{"command_line", command_line},
            {"config_hash", config_hash},
            {"seed", seed},
            {"tool_version", tool_version},
            {"outputs", outputs}};
}

void RunManifest::write(const std::string& path) const { write_json(path, to_json()); }

} // namespace finray
