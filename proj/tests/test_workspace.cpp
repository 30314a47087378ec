#include "finray/error.hpp"
#include "finray/rng.hpp"
#include "finray/workspace.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace finray;

namespace {

// Heron area, then R = abc / 4K
double heron_radius(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Eigen::Vector3d& r) {
    const double a = (q - r).norm(), b = (p - r).norm(), c = (p - q).norm();
    const double s = 0.5 * (a + b + c);
    const double area = std::sqrt(std::max(0.0, s * (s - a) * (s - b) * (s - c)));
    return a * b * c / (4.0 * area);
}

std::vector<WorkspaceSample> pooled(std::size_t n, std::uint64_t seed) {
    auto a = sample_workspace(default_geometry(), GripperLayout{}, Mode::Trigonal, n, seed).samples;
    auto b = sample_workspace(default_geometry(), GripperLayout{}, Mode::TShaped, n, seed).samples;
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

double mean_radius(const std::vector<WorkspaceSample>& s) {
    double m = 0;
    for (const auto& x : s) m += x.circumradius;
    return m / s.size();
}

} // namespace

TEST_CASE("circumradius analytic cases") {
    const double s = 30.0;
    const auto eq = circumradius({0, 0, 0}, {s, 0, 0}, {s / 2, s * std::sqrt(3.0) / 2, 0});
    CHECK(eq.radius == doctest::Approx(30.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(eq.radius == doctest::Approx(17.3205).epsilon(1e-5));
    const auto rt = circumradius({0, 0, 0}, {3, 0, 0}, {0, 4, 0});
    CHECK(rt.radius == doctest::Approx(2.5).epsilon(1e-12));
    CHECK((rt.center - Eigen::Vector3d(1.5, 2.0, 0)).norm() < 1e-12);
    try {
        circumradius({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
        FAIL("collinear points accepted");
    } catch (const Error& e) {
        CHECK(e.name() == "DegenerateTriangle");
    }
}

TEST_CASE("property: circumradius agrees with Heron and the centre is equidistant") {
    const CounterRng r(1, "test/circ");
    for (int i = 0; i < 500; ++i) {
        Eigen::Vector3d p[3];
        for (int k = 0; k < 3; ++k)
            p[k] = Eigen::Vector3d(r.uniform(i, 3 * k, -50, 50), r.uniform(i, 3 * k + 1, -50, 50),
                                   r.uniform(i, 3 * k + 2, -50, 50));
        const auto c = circumradius(p[0], p[1], p[2]);
        CHECK(c.radius == doctest::Approx(heron_radius(p[0], p[1], p[2])).epsilon(1e-7));
        for (int k = 0; k < 3; ++k) CHECK((p[k] - c.center).norm() == doctest::Approx(c.radius).epsilon(1e-9));
        for (double scale : {0.5, 2.0, 10.0}) {
            const auto cs = circumradius(scale * p[0], scale * p[1], scale * p[2]);
            CHECK(std::abs(cs.radius - scale * c.radius) <= 1e-9 * scale * c.radius);
        }
    }
}

TEST_CASE("histogram bins and conservation") {
    CHECK(radius_histogram({}, 10.0, Mode::Trigonal).counts ==
          std::vector<std::size_t>(radius_histogram({}, 10.0, Mode::Trigonal).counts.size(), 0));
    WorkspaceSample one;
    one.circumradius = 25.0;
    const auto h1 = radius_histogram({one}, 10.0, Mode::Trigonal);
    int ones = 0;
    for (auto c : h1.counts) ones += c == 1;
    CHECK(ones == 1);
    CHECK(h1.counts[3] == 1); // [20, 30)

    const auto run = sample_workspace(default_geometry(), GripperLayout{}, Mode::TShaped, 5000, 3);
    const auto h = radius_histogram(run.samples, 5.0, Mode::TShaped, 10.0, 100.0);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == run.samples.size());
    CHECK(run.samples.size() + run.skipped_degenerate + run.skipped_aperture == 5000);
}

TEST_CASE("sampling is deterministic across thread counts") {
    const auto g = default_geometry();
    for (Mode m : {Mode::Parallel, Mode::Trigonal, Mode::TShaped}) {
        SamplingOptions one, four;
        four.threads = 4;
        const auto a = sample_workspace(g, GripperLayout{}, m, 3000, 11, one);
        const auto b = sample_workspace(g, GripperLayout{}, m, 3000, 11, four);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].circumradius == b.samples[i].circumradius);
            CHECK(a.samples[i].circumcenter == b.samples[i].circumcenter);
        }
        const auto c = sample_workspace(g, GripperLayout{}, m, 3000, 12, one);
        CHECK(c.samples.front().circumradius != a.samples.front().circumradius);
    }
}

TEST_CASE("samples respect the fingertip geometry") {
    const auto g = default_geometry();
    const auto run = sample_workspace(g, GripperLayout{}, Mode::Trigonal, 500, 2);
    for (const auto& s : run.samples) {
        const auto c = circumradius(s.contact_points[0], s.contact_points[1], s.contact_points[2]);
        CHECK(c.radius == doctest::Approx(s.circumradius).epsilon(1e-12));
        for (const auto& f : s.configuration.fingers) {
            CHECK(f.y >= g.y_min);
            CHECK(f.y <= g.y_max);
            CHECK(f.theta == solve_theta(g, f.y));
        }
    }
    const auto par = sample_workspace(g, GripperLayout{}, Mode::Parallel, 500, 2);
    for (const auto& s : par.samples) {
        // pinch circle: the side tips are a diameter
        CHECK((s.contact_points[1] - s.contact_points[2]).norm() == doctest::Approx(2 * s.circumradius));
        CHECK(2 * s.circumradius >= GripperLayout{}.pinch_aperture - 1e-9);
    }
}

TEST_CASE("configuration 1 favours smaller radii than 2 and 3") {
    const auto one = sample_workspace(default_geometry(), GripperLayout{}, Mode::Parallel, 20000, 5).samples;
    CHECK(mean_radius(one) < mean_radius(pooled(20000, 5)));
}

TEST_CASE("kde single kernel and normalisation") {
    GridSpec gs;
    gs.origin = Eigen::Vector2d(-30, -30);
    gs.cell = 1.0;
    gs.nx = gs.ny = 61;
    const auto d = kde_density({Eigen::Vector2d(0, 0)}, 5.0, gs);
    CHECK(d.at(30, 30) == doctest::Approx(1.0 / (2 * std::numbers::pi * 25.0)).epsilon(1e-12));
    CHECK(d.at(30, 30) == doctest::Approx(0.0063662).epsilon(1e-4));
    CHECK(d.integral() == doctest::Approx(1.0).epsilon(0.02));
    const auto two = kde_density({Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)}, 5.0, gs);
    for (std::size_t k = 0; k < d.values.size(); ++k) CHECK(two.values[k] == doctest::Approx(d.values[k]).epsilon(1e-14));
}

TEST_CASE("kde matches a direct double sum") {
    const CounterRng r(4, "test/kde");
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i < 3000; ++i) pts.emplace_back(r.uniform(i, 0, -20, 40), r.normal(i, 1) * 8);
    const double h = 3.5;
    const GridSpec gs = covering_grid(pts, h, 2.0);
    const auto d = kde_density(pts, h, gs, 3);
    for (int k = 0; k < 40; ++k) {
        const int ix = static_cast<int>(r.uniform(10000 + k, 0) * gs.nx);
        const int iy = static_cast<int>(r.uniform(10000 + k, 1) * gs.ny);
        const double x = gs.origin.x() + ix * gs.cell, y = gs.origin.y() + iy * gs.cell;
        double s = 0;
        for (const auto& p : pts) s += std::exp(-((x - p.x()) * (x - p.x()) + (y - p.y()) * (y - p.y())) / (2 * h * h));
        s /= pts.size() * 2 * std::numbers::pi * h * h;
        CHECK(d.at(ix, iy) == doctest::Approx(s).epsilon(1e-10));
    }
    CHECK(d.integral() == doctest::Approx(1.0).epsilon(0.02));
    for (double v : d.values) CHECK(v >= 0.0);
}

TEST_CASE("component labelling is 4-connected") {
    // diagonal touch does not join
    const std::vector<char> mask = {1, 0, 0,
                                    0, 1, 1,
                                    0, 0, 1};
    std::vector<int> labels;
    CHECK(label_components(mask, 3, 3, labels) == 2);
    CHECK(labels[4] == labels[5]);
    CHECK(labels[5] == labels[8]);
    CHECK(labels[0] != labels[4]);
}

TEST_CASE("numpy-style linear quantile") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
}

TEST_CASE("dexterity map for the 60-80 mm band has one region") {
    const auto s = pooled(50000, 1);
    const auto m = dexterity_map(s, 60, 80);
    CHECK(m.region_count == 1);
}

TEST_CASE("translation range examples") {
    const auto s = pooled(100000, 1);
    const double dx35 = translation_range(s, 30, 40);
    CHECK(dx35 >= 74.0);
    CHECK(dx35 <= 90.0);
    CHECK(translation_range(s, 60, 70) <= 100.0);

    WorkspaceSample one;
    one.circumradius = 35.0;
    one.circumcenter = Eigen::Vector3d(3, 4, 50);
    CHECK(translation_range({one}, 30, 40) == 0.0);
}

TEST_CASE("dexterity errors") {
    WorkspaceSample one;
    one.circumradius = 35.0;
    try {
        dexterity_map({one}, 60, 80);
        FAIL("empty band accepted");
    } catch (const Error& e) {
        CHECK(e.name() == "EmptyBand");
    }
    CHECK_THROWS_AS(dexterity_map({one}, 80, 60), Error);
    CHECK_THROWS_AS(kde_density({}, 1.0, GridSpec{}), Error);
}
