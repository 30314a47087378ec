#pragma once

#include "finray/kinematics.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace finray {

struct WorkspaceSample {
    std::array<Eigen::Vector3d, 3> contact_points;
    double circumradius = 0.0;
    Eigen::Vector3d circumcenter = Eigen::Vector3d::Zero();
    GripperConfiguration configuration;
};

struct Circumcircle {
    double radius;
    Eigen::Vector3d center;
};

/// Throws DegenerateTriangle when the triangle area is below 1e-9 mm^2.
Circumcircle circumradius(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& p3);

struct SamplingOptions {
    // same y on all fingers and servos pinned at the mode preset
    bool equal_fingers = false;
    int threads = 1;
};

struct WorkspaceRun {
    std::vector<WorkspaceSample> samples;
    std::size_t skipped_degenerate = 0;
    // Parallel mode only: side tips closer than the pinch aperture
    std::size_t skipped_aperture = 0;
};

/// Monte Carlo over actuator strokes and servo angles. In Parallel mode the
/// two side fingers pinch and the fixed finger stays idle: the contact circle
/// has the side tips as a diameter and the first contact point is the
/// synthetic point closing that circle.
WorkspaceRun sample_workspace(const LinkageGeometry& g, const GripperLayout& layout, Mode mode, std::size_t n,
                              std::uint64_t seed, const SamplingOptions& opts = {});

/// counts[0] is the underflow bin, counts.back() the overflow bin, and
/// counts[k] covers [bin_edges[k-1], bin_edges[k]).
struct RadiusHistogram {
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    Mode mode = Mode::Parallel;
};

RadiusHistogram radius_histogram(const std::vector<WorkspaceSample>& samples, double bin_width, Mode mode,
                                 double lo = 0.0, double hi = 200.0);

struct GridSpec {
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    double cell = 2.0;
    int nx = 0;
    int ny = 0;
};

/// values are row-major with nx columns; node (ix, iy) sits at
/// origin + cell * (ix, iy).
struct DensityGrid {
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    double cell_size = 1.0;
    int nx = 0;
    int ny = 0;
    std::vector<double> values;
    double bandwidth = 0.0;

    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
    double integral() const;
};

double scott_bandwidth(const std::vector<Eigen::Vector2d>& points);
GridSpec covering_grid(const std::vector<Eigen::Vector2d>& points, double bandwidth, double cell,
                       double pad_bandwidths = 3.0);

DensityGrid kde_density(const std::vector<Eigen::Vector2d>& points, double bandwidth, const GridSpec& grid,
                        int threads = 1);

struct DexterityOptions {
    double quantile = 0.5;
    double cell = 2.0;
    // 0 selects the Scott-style rule
    double bandwidth = 0.0;
    // components holding less than this share of the above-threshold mass
    // are treated as noise and not counted
    double min_region_fraction = 0.05;
    int threads = 1;
};

struct DexterityMap {
    DensityGrid grid;
    int region_count = 0;
    // per cell: 0 outside, otherwise the 1-based id of a counted region
    std::vector<int> region_labels;
    double threshold = 0.0;
    std::vector<Eigen::Vector2d> centers;
};

DexterityMap dexterity_map(const std::vector<WorkspaceSample>& samples, double r_lo, double r_hi,
                           const DexterityOptions& opts = {});

/// 4-connected labelling of a boolean grid; returns the component count.
int label_components(const std::vector<char>& mask, int nx, int ny, std::vector<int>& labels);

/// Extent in x of band circumcentres lying in a counted dexterity region.
double translation_range(const std::vector<WorkspaceSample>& samples, double r_lo, double r_hi,
                         const DexterityOptions& opts = {});
double translation_range(const DexterityMap& map);

/// Linear-interpolated quantile (numpy default); v need not be sorted.
double quantile(std::vector<double> v, double q);

} // namespace finray
