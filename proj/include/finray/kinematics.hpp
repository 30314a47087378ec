#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace finray {

/// Four-bar finger linkage. Lengths in mm, angles in rad.
///
/// The crank is driven by the linear actuator through pivot radius R1:
/// crank angle = crank_phase + atan2(y, R1). R2 is the offset from the
/// follower pivot to the finger base along the finger axis.
struct LinkageGeometry {
    double ground_link = 40.0;
    double crank_link = 20.0;
    double coupler_link = 40.0;
    double follower_link = 18.0;
    double pivot_radius_1 = 25.0;
    double pivot_radius_2 = 12.0;
    double y_min = -20.0;
    double y_max = 20.0;
    double finger_length = 80.0;
    double crank_phase = 1.5707963267948966;
    double theta_offset = 0.0;
};

struct FingerState {
    double y = 0.0;
    double theta = 0.0;
};

enum class Mode { Parallel = 1, Trigonal = 2, TShaped = 3 };

/// Palm layout and servo presets. Side finger 1 sits at azimuth +servo_1,
/// side finger 2 at -servo_2, the fixed finger at pi.
struct GripperLayout {
    double palm_radius = 64.0;
    // canonical servo angle and sampling half-width, indexed by mode - 1
    std::array<double, 3> preset = {1.5707963267948966, 1.0471975511965976, 1.4311699866353502};
    std::array<double, 3> spread = {0.17453292519943295, 0.2617993877991494, 0.08726646259971647};
    // Parallel mode: minimum facing gap between the two side tips, mm
    double pinch_aperture = 11.0;
};

struct GripperConfiguration {
    Mode mode = Mode::Parallel;
    double servo_angle_1 = 0.0;
    double servo_angle_2 = 0.0;
    std::array<FingerState, 3> fingers{};
};

struct FingertipPose {
    Eigen::Vector3d position;
    Eigen::Vector3d normal;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Follower angle before the home offset is removed.
double follower_angle(const LinkageGeometry& g, double y);

/// Throws InvalidGeometry for non-positive lengths or an empty travel, and
/// SingularLinkage if the loop does not close somewhere on the travel.
void validate_geometry(const LinkageGeometry& g);

/// Returns g with theta_offset set so that solve_theta(g, y_min) == 0.
LinkageGeometry with_home_offset(LinkageGeometry g);

/// Shipped default geometry, home offset applied.
LinkageGeometry default_geometry();

double solve_theta(const LinkageGeometry& g, double y);

/// Uniform sweep of n points over the travel.
std::vector<FingerState> sweep(const LinkageGeometry& g, int n);

LinearFit fit_linear_map(const LinkageGeometry& g, int n_samples);
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

GripperConfiguration canonical_configuration(const GripperLayout& layout, Mode mode);

/// Palm-frame fingertip pose. The palm axis is +z; a finger at rest points
/// along +z and bends toward the palm centre as theta grows.
FingertipPose fingertip_position(const LinkageGeometry& g, const GripperLayout& layout,
                                 const GripperConfiguration& config, int finger_index);

double finger_azimuth(const GripperConfiguration& config, int finger_index);

} // namespace finray
