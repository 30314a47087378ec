#include "finray/workspace.hpp"

#include "finray/error.hpp"
#include "finray/parallel.hpp"
#include "finray/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace finray {

Circumcircle circumradius(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& p3) {
    const Eigen::Vector3d a = p1 - p3;
    const Eigen::Vector3d b = p2 - p3;
    const Eigen::Vector3d axb = a.cross(b);
    const double n2 = axb.squaredNorm();
    const double area = 0.5 * std::sqrt(n2);
    if (!(area >= 1e-9))
        throw Error("DegenerateTriangle", "contact points are collinear");
    const double la = (p2 - p3).norm();
    const double lb = (p1 - p3).norm();
    const double lc = (p1 - p2).norm();
    Circumcircle c;
    c.radius = la * lb * lc / (4.0 * area);
    c.center = (a.squaredNorm() * b - b.squaredNorm() * a).cross(axb) / (2.0 * n2) + p3;
    return c;
}

namespace {

constexpr std::uint32_t kLaneY = 0;  // lanes 0..2
constexpr std::uint32_t kLaneServo = 3; // lanes 3..4

struct Draw {
    bool ok = false;
    bool aperture_skip = false;
    WorkspaceSample sample;
};

Draw draw_one(const LinkageGeometry& g, const GripperLayout& layout, Mode mode, const CounterRng& rng,
              std::uint64_t index, const SamplingOptions& opts) {
    const int m = static_cast<int>(mode) - 1;
    GripperConfiguration cfg;
    cfg.mode = mode;
    double y_shared = rng.uniform(index, kLaneY, g.y_min, g.y_max);
    for (int f = 0; f < 3; ++f) {
        double y = opts.equal_fingers ? y_shared : rng.uniform(index, kLaneY + f, g.y_min, g.y_max);
        cfg.fingers[f] = {y, solve_theta(g, y)};
    }
    if (opts.equal_fingers) {
        cfg.servo_angle_1 = cfg.servo_angle_2 = layout.preset[m];
    } else {
        cfg.servo_angle_1 = layout.preset[m] + layout.spread[m] * rng.uniform(index, kLaneServo, -1.0, 1.0);
        cfg.servo_angle_2 = layout.preset[m] + layout.spread[m] * rng.uniform(index, kLaneServo + 1, -1.0, 1.0);
    }

    Draw d;
    d.sample.configuration = cfg;
    std::array<Eigen::Vector3d, 3> tip;
    for (int f = 0; f < 3; ++f) tip[f] = fingertip_position(g, layout, cfg, f).position;

    if (mode == Mode::Parallel) {
        const Eigen::Vector3d m1 = layout.palm_radius *
            Eigen::Vector3d(std::cos(finger_azimuth(cfg, 1)), std::sin(finger_azimuth(cfg, 1)), 0.0);
        const Eigen::Vector3d m2 = layout.palm_radius *
            Eigen::Vector3d(std::cos(finger_azimuth(cfg, 2)), std::sin(finger_azimuth(cfg, 2)), 0.0);
        const Eigen::Vector3d axis = (m2 - m1).normalized();
        const Eigen::Vector3d span = tip[2] - tip[1];
        if (span.dot(axis) < layout.pinch_aperture) {
            d.aperture_skip = true;
            return d;
        }
        const Eigen::Vector3d mid = 0.5 * (tip[1] + tip[2]);
        const double r = 0.5 * span.norm();
        const Eigen::Vector3d u = span.cross(Eigen::Vector3d::UnitZ()).normalized();
        d.sample.contact_points = {mid + r * u, tip[1], tip[2]};
        d.sample.circumradius = r;
        d.sample.circumcenter = mid;
        d.ok = true;
        return d;
    }

    try {
        Circumcircle c = circumradius(tip[0], tip[1], tip[2]);
        d.sample.contact_points = tip;
        d.sample.circumradius = c.radius;
        d.sample.circumcenter = c.center;
        d.ok = true;
    } catch (const Error&) {
    }
    return d;
}

} // namespace

WorkspaceRun sample_workspace(const LinkageGeometry& g, const GripperLayout& layout, Mode mode, std::size_t n,
                              std::uint64_t seed, const SamplingOptions& opts) {
    if (n < 1) throw Error("InvalidArgument", "sample count must be >= 1");
    validate_geometry(g);
    const CounterRng rng(seed, "workspace/" + std::to_string(static_cast<int>(mode)));
    std::vector<Draw> draws(n);
    parallel_for(n, opts.threads, [&](std::size_t i) { draws[i] = draw_one(g, layout, mode, rng, i, opts); });
    WorkspaceRun run;
    run.samples.reserve(n);
    for (auto& d : draws) {
        if (d.ok)
            run.samples.push_back(std::move(d.sample));
        else if (d.aperture_skip)
            ++run.skipped_aperture;
        else
            ++run.skipped_degenerate;
    }
    return run;
}

RadiusHistogram radius_histogram(const std::vector<WorkspaceSample>& samples, double bin_width, Mode mode,
                                 double lo, double hi) {
    if (!(bin_width > 0.0)) throw Error("InvalidArgument", "bin_width must be positive");
    if (!(hi > lo)) throw Error("InvalidArgument", "histogram range is empty");
    RadiusHistogram h;
    h.mode = mode;
    const int nbins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-9));
    for (int k = 0; k <= nbins; ++k) h.bin_edges.push_back(lo + k * bin_width);
    h.counts.assign(nbins + 2, 0);
    const double top = h.bin_edges.back();
    for (const auto& s : samples) {
        const double r = s.circumradius;
        if (r < lo)
            ++h.counts.front();
        else if (r >= top)
            ++h.counts.back();
        else
            ++h.counts[1 + std::min(nbins - 1, static_cast<int>((r - lo) / bin_width))];
    }
    return h;
}

double DensityGrid::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_size * cell_size;
}

double scott_bandwidth(const std::vector<Eigen::Vector2d>& points) {
    const double n = static_cast<double>(points.size());
    if (points.size() < 2) return 0.0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : points) mean += p;
    mean /= n;
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (const auto& p : points) var += (p - mean).cwiseAbs2();
    var /= n;
    // single isotropic kernel: per-axis Scott factors pooled by mean variance
    return std::pow(n, -1.0 / 6.0) * std::sqrt(0.5 * (var.x() + var.y()));
}

GridSpec covering_grid(const std::vector<Eigen::Vector2d>& points, double bandwidth, double cell,
                       double pad_bandwidths) {
    if (points.empty()) throw Error("EmptyInput", "no points to cover");
    Eigen::Vector2d lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double pad = pad_bandwidths * bandwidth;
    GridSpec gs;
    gs.cell = cell;
    gs.origin = lo - Eigen::Vector2d::Constant(pad);
    gs.nx = static_cast<int>(std::floor((hi.x() + pad - gs.origin.x()) / cell)) + 2;
    gs.ny = static_cast<int>(std::floor((hi.y() + pad - gs.origin.y()) / cell)) + 2;
    return gs;
}

DensityGrid kde_density(const std::vector<Eigen::Vector2d>& points, double bandwidth, const GridSpec& grid,
                        int threads) {
    if (points.empty()) throw Error("EmptyInput", "kde needs at least one point");
    if (!(bandwidth > 0.0)) throw Error("InvalidArgument", "bandwidth must be positive");
    if (grid.nx < 1 || grid.ny < 1 || !(grid.cell > 0.0)) throw Error("InvalidArgument", "empty grid");
    DensityGrid d;
    d.origin = grid.origin;
    d.cell_size = grid.cell;
    d.nx = grid.nx;
    d.ny = grid.ny;
    d.bandwidth = bandwidth;
    d.values.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0.0);
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double norm = 1.0 / (static_cast<double>(points.size()) * 2.0 * std::numbers::pi * bandwidth * bandwidth);
    // kernel is separable: exp(-dx^2) * exp(-dy^2); x factors are tabulated
    // per block of points and reused for every row
    constexpr std::size_t block = 2048;
    std::vector<double> ex;
    for (std::size_t b0 = 0; b0 < points.size(); b0 += block) {
        const std::size_t b1 = std::min(points.size(), b0 + block);
        ex.assign((b1 - b0) * grid.nx, 0.0);
        for (std::size_t p = b0; p < b1; ++p)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const double dx = grid.origin.x() + grid.cell * ix - points[p].x();
                ex[(p - b0) * grid.nx + ix] = std::exp(-dx * dx * inv2h2);
            }
        parallel_for(grid.ny, threads, [&](std::size_t iy) {
            const double gy = grid.origin.y() + grid.cell * iy;
            double* row = &d.values[iy * grid.nx];
            for (std::size_t p = b0; p < b1; ++p) {
                const double dy = gy - points[p].y();
                const double wy = std::exp(-dy * dy * inv2h2);
                if (wy < 1e-300) continue;
                const double* e = &ex[(p - b0) * grid.nx];
                for (int ix = 0; ix < grid.nx; ++ix) row[ix] += wy * e[ix];
            }
        });
    }
    for (double& v : d.values) v *= norm;
    return d;
}

int label_components(const std::vector<char>& mask, int nx, int ny, std::vector<int>& labels) {
    labels.assign(mask.size(), 0);
    int count = 0;
    std::vector<int> stack;
    for (int start = 0; start < nx * ny; ++start) {
        if (!mask[start] || labels[start]) continue;
        ++count;
        labels[start] = count;
        stack.push_back(start);
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            const int cx = c % nx, cy = c / nx;
            const int nb[4][2] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
            for (auto& q : nb) {
                if (q[0] < 0 || q[0] >= nx || q[1] < 0 || q[1] >= ny) continue;
                const int k = q[1] * nx + q[0];
                if (mask[k] && !labels[k]) {
                    labels[k] = count;
                    stack.push_back(k);
                }
            }
        }
    }
    return count;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw Error("EmptyInput", "quantile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 1.0) * (v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

DexterityMap dexterity_map(const std::vector<WorkspaceSample>& samples, double r_lo, double r_hi,
                           const DexterityOptions& opts) {
    if (!(r_lo < r_hi)) throw Error("InvalidArgument", "radius band requires r_lo < r_hi");
    DexterityMap m;
    for (const auto& s : samples)
        if (s.circumradius >= r_lo && s.circumradius <= r_hi)
            m.centers.emplace_back(s.circumcenter.x(), s.circumcenter.y());
    if (m.centers.empty()) throw Error("EmptyBand", "no samples with radius in band");

    double h = opts.bandwidth > 0.0 ? opts.bandwidth : scott_bandwidth(m.centers);
    if (!(h > 0.0)) h = opts.cell; // a single distinct point
    m.grid = kde_density(m.centers, h, covering_grid(m.centers, h, opts.cell), opts.threads);

    std::vector<double> positive;
    for (double v : m.grid.values)
        if (v > 0.0) positive.push_back(v);
    m.threshold = quantile(positive, opts.quantile);

    std::vector<char> mask(m.grid.values.size());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = m.grid.values[k] > m.threshold;
    std::vector<int> raw;
    const int n = label_components(mask, m.grid.nx, m.grid.ny, raw);

    std::vector<double> mass(n + 1, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k)
        if (raw[k]) {
            mass[raw[k]] += m.grid.values[k];
            total += m.grid.values[k];
        }
    std::vector<int> remap(n + 1, 0);
    for (int c = 1; c <= n; ++c)
        if (mass[c] >= opts.min_region_fraction * total) remap[c] = ++m.region_count;
    m.region_labels.resize(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) m.region_labels[k] = remap[raw[k]];
    return m;
}

double translation_range(const DexterityMap& map) {
    const auto& g = map.grid;
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& c : map.centers) {
        const int ix = std::clamp(static_cast<int>(std::lround((c.x() - g.origin.x()) / g.cell_size)), 0, g.nx - 1);
        const int iy = std::clamp(static_cast<int>(std::lround((c.y() - g.origin.y()) / g.cell_size)), 0, g.ny - 1);
        if (!map.region_labels[static_cast<std::size_t>(iy) * g.nx + ix]) continue;
        if (!any) {
            lo = hi = c.x();
            any = true;
        }
        lo = std::min(lo, c.x());
        hi = std::max(hi, c.x());
    }
    return any ? hi - lo : 0.0;
}

double translation_range(const std::vector<WorkspaceSample>& samples, double r_lo, double r_hi,
                         const DexterityOptions& opts) {
    return translation_range(dexterity_map(samples, r_lo, r_hi, opts));
}

} // namespace finray
