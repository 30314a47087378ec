#include "finray/kinematics.hpp"

#include "finray/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace finray {

double follower_angle(const LinkageGeometry& g, double y) {
    const double phi = g.crank_phase + std::atan2(y, g.pivot_radius_1);
    const double ax = g.crank_link * std::cos(phi);
    const double ay = g.crank_link * std::sin(phi);
    // crank tip relative to follower pivot at (ground_link, 0)
    const double dx = ax - g.ground_link;
    const double dy = ay;
    const double s2 = dx * dx + dy * dy;
    const double s = std::sqrt(s2);
    const double c = g.follower_link;
    const double b = g.coupler_link;
    if (s == 0.0)
        throw Error("SingularLinkage", "crank tip coincides with follower pivot at y = " + std::to_string(y));
    const double cos_gamma = (c * c + s2 - b * b) / (2.0 * c * s);
    if (std::abs(cos_gamma) > 1.0)
        throw Error("SingularLinkage", "loop closure has no real solution at y = " + std::to_string(y));
    const double beta = std::atan2(dy, dx);
    // elbow-up branch
    return beta - std::acos(cos_gamma);
}

void validate_geometry(const LinkageGeometry& g) {
    const double lengths[] = {g.ground_link, g.crank_link, g.coupler_link, g.follower_link,
                              g.pivot_radius_1, g.pivot_radius_2, g.finger_length};
    for (double v : lengths)
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error("InvalidGeometry", "link lengths and radii must be positive");
    if (!(g.y_min < g.y_max))
        throw Error("InvalidGeometry", "actuator travel requires y_min < y_max");
    // closure must hold on a dense sweep; the solve is continuous so gaps
    // between samples cannot hide a singular band wider than the step
    constexpr int n = 512;
    double prev = follower_angle(g, g.y_min);
    for (int i = 1; i <= n; ++i) {
        double y = g.y_min + (g.y_max - g.y_min) * i / n;
        double psi = follower_angle(g, y);
        if (psi < prev - 1e-12)
            throw Error("InvalidGeometry", "bend angle is not monotone over the travel");
        prev = psi;
    }
}

LinkageGeometry with_home_offset(LinkageGeometry g) {
    g.theta_offset = follower_angle(g, g.y_min);
    return g;
}

LinkageGeometry default_geometry() { return with_home_offset(LinkageGeometry{}); }

double solve_theta(const LinkageGeometry& g, double y) {
    if (!(y >= g.y_min && y <= g.y_max))
        throw Error("OutOfTravel", "y = " + std::to_string(y) + " outside [" + std::to_string(g.y_min) +
                                       ", " + std::to_string(g.y_max) + "]");
    return follower_angle(g, y) - g.theta_offset;
}

std::vector<FingerState> sweep(const LinkageGeometry& g, int n) {
    std::vector<FingerState> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        double y = (n == 1) ? g.y_min : g.y_min + (g.y_max - g.y_min) * i / (n - 1);
        out.push_back({y, solve_theta(g, y)});
    }
    return out;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n)
        throw Error("InsufficientSamples", "linear fit needs at least 3 samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
    }
    f.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

LinearFit fit_linear_map(const LinkageGeometry& g, int n_samples) {
    if (n_samples < 3)
        throw Error("InsufficientSamples", "fit_linear_map needs n_samples >= 3");
    std::vector<double> ys, th;
    for (const auto& s : sweep(g, n_samples)) {
        ys.push_back(s.y);
        th.push_back(s.theta);
    }
    return least_squares(ys, th);
}

GripperConfiguration canonical_configuration(const GripperLayout& layout, Mode mode) {
    GripperConfiguration c;
    c.mode = mode;
    c.servo_angle_1 = layout.preset[static_cast<int>(mode) - 1];
    c.servo_angle_2 = c.servo_angle_1;
    return c;
}

double finger_azimuth(const GripperConfiguration& config, int finger_index) {
    switch (finger_index) {
    case 0: return std::numbers::pi;
    case 1: return config.servo_angle_1;
    case 2: return -config.servo_angle_2;
    default: throw Error("InvalidFinger", "finger index must be 0, 1 or 2");
    }
}

FingertipPose fingertip_position(const LinkageGeometry& g, const GripperLayout& layout,
                                 const GripperConfiguration& config, int finger_index) {
    const double az = finger_azimuth(config, finger_index);
    const double theta = config.fingers[finger_index].theta;
    const Eigen::Vector3d radial(std::cos(az), std::sin(az), 0.0);
    const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d mount = layout.palm_radius * radial;
    const Eigen::Vector3d dir = std::sin(theta) * (-radial) + std::cos(theta) * z;
    FingertipPose p;
    p.position = mount + (g.pivot_radius_2 + g.finger_length) * dir;
    // pad faces the palm axis
    p.normal = std::cos(theta) * (-radial) - std::sin(theta) * z;
    return p;
}

} // namespace finray
