#pragma once

#include <Eigen/Dense>

#include <vector>

namespace finray {

/// Planar pseudo-rigid-body Fin Ray finger pair. Each finger is a triangle:
/// a straight front beam facing the object and a back beam meeting it at a
/// pinned tip, joined by crossbeam ribs. Beams are chains of rigid segments
/// with torsional springs at the joints and at the clamped base.
///
/// Two mirrored fingers face each other across x = 0; the object sits on
/// that axis. Actuation rotates each finger about its front base node
/// toward the object.
struct FinRayModel {
    int n_segments = 10;
    double joint_stiffness = 100.0;  // N*mm/rad
    double rib_stiffness = 2.0;      // N/mm
    int rib_count = 4;
    double base_width = 30.0;        // mm
    double height = 90.0;            // mm
    double contact_penalty = 100.0;  // N/mm
    // segment stretch; stiff so beams behave as rigid links
    double axial_stiffness = 500.0;  // N/mm
    // distance from the symmetry axis to each front base node
    double half_gap = 30.0;          // mm
    // external load on each tip, toward the axis
    double tip_load = 0.0;           // N
    int max_iterations = 50000;
    double tolerance = 1e-6;         // N, infinity norm of the energy gradient
};

enum class Shape { Circle, Square, Rectangle };

/// 2-D cross-section in the finger plane: circle of radius R (sphere),
/// square of half-side R (cube), rectangle of half-width R and half-height
/// aspect * R (cylinder lying across the fingers).
struct ObjectPrimitive {
    Shape shape = Shape::Circle;
    double characteristic_radius = 20.0;
    Eigen::Vector2d center = Eigen::Vector2d(0.0, 45.0);
    double aspect = 1.6;

    /// Signed distance, negative inside.
    double sdf(const Eigen::Vector2d& p) const;
    Eigen::Vector2d sdf_gradient(const Eigen::Vector2d& p) const;
};

struct ComplianceResult {
    double max_deformation = 0.0;     // mm, from the rigidly actuated shape
    double total_contact_force = 0.0; // N
    int contact_point_count = 0;
    bool converged = false;
    int iterations = 0;
    double energy = 0.0;
    double gradient_norm = 0.0;       // infinity norm
    double max_penetration = 0.0;     // mm
    double tip_deflection = 0.0;      // mm, left tip along +x
    // node positions, left finger then right; see FinRayFrame for indexing
    std::vector<Eigen::Vector2d> nodes;
    std::vector<double> energy_trace;
};

/// Node layout of one finger: front beam 0..n (n is the shared tip), then
/// back beam 0..n-1. Nodes 0 (front base) and n+1 (back base) are clamped.
struct FinRayFrame {
    int n = 0;
    int per_finger() const { return 2 * n + 1; }
    int front(int i) const { return i; }
    int back(int i) const { return i == n ? n : n + 1 + i; }
};

/// Rest shape of both fingers rotated by the actuation angle.
std::vector<Eigen::Vector2d> actuated_shape(const FinRayModel& model, double actuation);

void validate_model(const FinRayModel& model);

/// Throws InvalidPlacement if the object penetrates the rest shape.
ComplianceResult solve_equilibrium(const FinRayModel& model, const ObjectPrimitive& object, double actuation,
                                   bool keep_energy_trace = false);
/// Free fingers, external tip load only.
ComplianceResult solve_equilibrium(const FinRayModel& model, double actuation, bool keep_energy_trace = false);

/// Solves each step, starting from the previous equilibrium carried rigidly
/// through the actuation increment.
std::vector<ComplianceResult> contact_force_profile(const FinRayModel& model, const ObjectPrimitive& object,
                                                    const std::vector<double>& schedule);

} // namespace finray
