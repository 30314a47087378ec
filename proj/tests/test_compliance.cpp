#include "finray/compliance.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace finray;
using finray::testing::error_name;

namespace {

constexpr double kNominal = 0.35;

ObjectPrimitive object(Shape s) {
    ObjectPrimitive o;
    o.shape = s;
    return o;
}

} // namespace

TEST_CASE("rest equilibrium is exactly zero") {
    const FinRayModel m;
    for (Shape s : {Shape::Circle, Shape::Square, Shape::Rectangle}) {
        const auto r = solve_equilibrium(m, object(s), 0.0);
        CHECK(r.converged);
        CHECK(r.max_deformation == 0.0);
        CHECK(r.total_contact_force == 0.0);
        CHECK(r.contact_point_count == 0);
    }
}

TEST_CASE("circle deforms and pushes least at matched actuation") {
    const FinRayModel m;
    const auto c = solve_equilibrium(m, object(Shape::Circle), kNominal);
    const auto s = solve_equilibrium(m, object(Shape::Square), kNominal);
    const auto r = solve_equilibrium(m, object(Shape::Rectangle), kNominal);
    REQUIRE(c.converged);
    REQUIRE(s.converged);
    REQUIRE(r.converged);
    CHECK(c.max_deformation < s.max_deformation);
    CHECK(c.max_deformation < r.max_deformation);
    CHECK(c.total_contact_force < s.total_contact_force);
    CHECK(c.total_contact_force < r.total_contact_force);
    // calibrated regime for the default circle
    CHECK(c.max_deformation >= 5.0);
    CHECK(c.max_deformation <= 10.0);
}

TEST_CASE("property: converged solves respect the penetration bound and gradient tolerance") {
    const FinRayModel m;
    for (Shape s : {Shape::Circle, Shape::Square, Shape::Rectangle})
        for (double a : {0.2, 0.3, kNominal}) {
            const auto r = solve_equilibrium(m, object(s), a);
            REQUIRE(r.converged);
            CHECK(r.gradient_norm <= m.tolerance);
            CHECK(r.max_penetration <= 5.0 / m.contact_penalty);
            CHECK(r.max_deformation >= 0.0);
            CHECK(r.total_contact_force >= 0.0);
            if (r.contact_point_count == 0) CHECK(r.total_contact_force == 0.0);
        }
}

TEST_CASE("free tip deflection is linear in a small load") {
    FinRayModel m;
    m.tip_load = 0.05;
    const auto one = solve_equilibrium(m, 0.0);
    m.tip_load = 0.1;
    const auto two = solve_equilibrium(m, 0.0);
    REQUIRE(one.converged);
    REQUIRE(two.converged);
    CHECK(one.tip_deflection > 0.0);
    CHECK(two.tip_deflection / one.tip_deflection == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("property: energy never rises on an accepted step") {
    const FinRayModel m;
    for (Shape s : {Shape::Circle, Shape::Square, Shape::Rectangle}) {
        const auto r = solve_equilibrium(m, object(s), kNominal, true);
        REQUIRE(r.energy_trace.size() > 2);
        for (std::size_t k = 1; k < r.energy_trace.size(); ++k)
            // the line search may accept a step that is flat to rounding
            CHECK(r.energy_trace[k] <= r.energy_trace[k - 1] + 1e-13 * std::max(1.0, std::abs(r.energy_trace[k - 1])));
    }
}

TEST_CASE("centred circle gives a mirror-symmetric shape") {
    const FinRayModel m;
    const auto r = solve_equilibrium(m, object(Shape::Circle), kNominal);
    REQUIRE(r.converged);
    const int per = FinRayFrame{m.n_segments}.per_finger();
    REQUIRE(static_cast<int>(r.nodes.size()) == 2 * per);
    double worst = 0.0;
    for (int k = 0; k < per; ++k) {
        const Eigen::Vector2d l = r.nodes[k], rr = r.nodes[per + k];
        worst = std::max(worst, (Eigen::Vector2d(-l.x(), l.y()) - rr).norm());
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("actuated rest shape closes at the tip") {
    const FinRayModel m;
    const FinRayFrame f{m.n_segments};
    const auto nodes = actuated_shape(m, 0.0);
    CHECK(nodes[f.front(m.n_segments)] == nodes[f.back(m.n_segments)]);
    CHECK(nodes[f.front(0)].x() == doctest::Approx(-m.half_gap));
    CHECK(nodes[f.front(m.n_segments)].y() == doctest::Approx(m.height));
}

TEST_CASE("force profile warm starts and grows with actuation") {
    const FinRayModel m;
    std::vector<double> sched;
    for (int k = 1; k <= 8; ++k) sched.push_back(kNominal * k / 8);
    const auto prof = contact_force_profile(m, object(Shape::Circle), sched);
    REQUIRE(prof.size() == sched.size());
    for (std::size_t k = 1; k < prof.size(); ++k)
        CHECK(prof[k].total_contact_force >= prof[k - 1].total_contact_force);
    // the last step agrees with a cold solve
    const auto cold = solve_equilibrium(m, object(Shape::Circle), kNominal);
    CHECK(prof.back().total_contact_force == doctest::Approx(cold.total_contact_force).epsilon(1e-4));

    const auto flat = contact_force_profile(m, object(Shape::Square), {0.3, 0.3, 0.3});
    CHECK(std::abs(flat[1].total_contact_force - flat[0].total_contact_force) < 1e-9);
    CHECK(std::abs(flat[2].max_deformation - flat[1].max_deformation) < 1e-9);

    const auto sq = contact_force_profile(m, object(Shape::Square), sched);
    CHECK(prof.back().total_contact_force < sq.back().total_contact_force);
}

TEST_CASE("errors and non-convergence") {
    const FinRayModel m;
    ObjectPrimitive inside = object(Shape::Circle);
    inside.characteristic_radius = 40.0;
    CHECK(error_name([&] { solve_equilibrium(m, inside, 0.1); }) == "InvalidPlacement");
    CHECK(error_name([&] { solve_equilibrium(m, object(Shape::Circle), -0.1); }) == "InvalidArgument");
    CHECK(error_name([&] { contact_force_profile(m, object(Shape::Circle), {0.2, 0.1}); }) == "InvalidArgument");

    FinRayModel bad = m;
    bad.n_segments = 2;
    CHECK(error_name([&] { validate_model(bad); }) == "InvalidModel");
    bad = m;
    bad.rib_stiffness = 0.0;
    CHECK(error_name([&] { validate_model(bad); }) == "InvalidModel");

    FinRayModel capped = m;
    capped.max_iterations = 3;
    const auto r = solve_equilibrium(capped, object(Shape::Square), kNominal);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(error_name([&] { contact_force_profile(capped, object(Shape::Square), {kNominal}); }) == "NonConvergence");
}

TEST_CASE("signed distance of the primitives") {
    ObjectPrimitive c = object(Shape::Circle);
    CHECK(c.sdf(c.center) == doctest::Approx(-20.0));
    CHECK(c.sdf(c.center + Eigen::Vector2d(25, 0)) == doctest::Approx(5.0));
    ObjectPrimitive s = object(Shape::Square);
    CHECK(s.sdf(s.center + Eigen::Vector2d(23, 0)) == doctest::Approx(3.0));
    CHECK(s.sdf(s.center + Eigen::Vector2d(23, 24)) == doctest::Approx(5.0));
    ObjectPrimitive r = object(Shape::Rectangle);
    CHECK(r.sdf(r.center + Eigen::Vector2d(0, 40)) == doctest::Approx(8.0));
    // gradient is the unit outward normal outside the body
    const Eigen::Vector2d g = c.sdf_gradient(c.center + Eigen::Vector2d(3, 4) * 10);
    CHECK(g.x() == doctest::Approx(0.6));
    CHECK(g.y() == doctest::Approx(0.8));
}
