#include "finray/compliance.hpp"

#include "finray/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace finray {

double ObjectPrimitive::sdf(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d q = p - center;
    if (shape == Shape::Circle) return q.norm() - characteristic_radius;
    const Eigen::Vector2d half(characteristic_radius,
                               shape == Shape::Square ? characteristic_radius : aspect * characteristic_radius);
    const Eigen::Vector2d d = q.cwiseAbs() - half;
    const Eigen::Vector2d outside = d.cwiseMax(0.0);
    return outside.norm() + std::min(std::max(d.x(), d.y()), 0.0);
}

Eigen::Vector2d ObjectPrimitive::sdf_gradient(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d q = p - center;
    if (shape == Shape::Circle) {
        const double n = q.norm();
        return n > 0.0 ? Eigen::Vector2d(q / n) : Eigen::Vector2d(1.0, 0.0);
    }
    const Eigen::Vector2d half(characteristic_radius,
                               shape == Shape::Square ? characteristic_radius : aspect * characteristic_radius);
    const Eigen::Vector2d d = q.cwiseAbs() - half;
    const Eigen::Vector2d sgn(q.x() >= 0 ? 1.0 : -1.0, q.y() >= 0 ? 1.0 : -1.0);
    if (d.x() > 0.0 || d.y() > 0.0) {
        const Eigen::Vector2d o = d.cwiseMax(0.0);
        return o.cwiseProduct(sgn) / o.norm();
    }
    // inside: push out through the nearest face
    return d.x() > d.y() ? Eigen::Vector2d(sgn.x(), 0.0) : Eigen::Vector2d(0.0, sgn.y());
}

void validate_model(const FinRayModel& m) {
    if (m.n_segments < 3) throw Error("InvalidModel", "n_segments must be >= 3");
    if (!(m.joint_stiffness > 0 && m.rib_stiffness > 0 && m.contact_penalty > 0 && m.axial_stiffness > 0))
        throw Error("InvalidModel", "stiffnesses must be positive");
    if (!(m.base_width > 0 && m.height > 0)) throw Error("InvalidModel", "rest shape must have positive size");
    if (m.rib_count < 0 || m.rib_count > m.n_segments - 1) throw Error("InvalidModel", "rib_count out of range");
    if (m.max_iterations < 1 || !(m.tolerance > 0)) throw Error("InvalidModel", "solver limits must be positive");
}

namespace {

Eigen::Vector2d rotate(const Eigen::Vector2d& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

double wrap(double a) {
    while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
    while (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
    return a;
}

// d(atan2(v.y, v.x)) / dv
Eigen::Vector2d angle_grad(const Eigen::Vector2d& v) { return Eigen::Vector2d(-v.y(), v.x()) / v.squaredNorm(); }

std::vector<Eigen::Vector2d> rest_left(const FinRayModel& m) {
    const FinRayFrame fr{m.n_segments};
    std::vector<Eigen::Vector2d> p(fr.per_finger());
    const Eigen::Vector2d f0(-m.half_gap, 0.0), b0(-m.half_gap - m.base_width, 0.0), tip(-m.half_gap, m.height);
    for (int i = 0; i <= fr.n; ++i) p[fr.front(i)] = f0 + (tip - f0) * (double(i) / fr.n);
    for (int i = 0; i < fr.n; ++i) p[fr.back(i)] = b0 + (tip - b0) * (double(i) / fr.n);
    return p;
}

struct Problem {
    const FinRayModel& m;
    const ObjectPrimitive* obj;
    double actuation;
    FinRayFrame fr;
    std::vector<Eigen::Vector2d> rigid; // both fingers
    std::vector<int> dof;               // node -> first dof index or -1
    int ndof = 0;
    std::vector<std::vector<int>> chains; // node chains, base first
    std::vector<Eigen::Vector2d> base_dir;
    std::vector<double> seg_len;          // per chain, per segment
    std::vector<std::pair<int, int>> ribs;
    std::vector<double> rib_len;

    Problem(const FinRayModel& model, const ObjectPrimitive* object, double a)
        : m(model), obj(object), actuation(a), fr{model.n_segments} {
        rigid = actuated_shape(m, a);
        const int per = fr.per_finger();
        dof.assign(2 * per, -1);
        for (int f = 0; f < 2; ++f)
            for (int k = 0; k < per; ++k) {
                if (k == fr.front(0) || k == fr.back(0)) continue;
                dof[f * per + k] = ndof;
                ndof += 2;
            }
        for (int f = 0; f < 2; ++f) {
            std::vector<int> front, back;
            for (int i = 0; i <= fr.n; ++i) front.push_back(f * per + fr.front(i));
            for (int i = 0; i <= fr.n; ++i) back.push_back(f * per + fr.back(i));
            for (auto* c : {&front, &back}) {
                chains.push_back(*c);
                base_dir.push_back((rigid[(*c)[1]] - rigid[(*c)[0]]).normalized());
            }
            for (int k = 1; k <= m.rib_count; ++k) {
                const int i = static_cast<int>(std::lround(double(k) * fr.n / (m.rib_count + 1)));
                ribs.emplace_back(f * per + fr.front(i), f * per + fr.back(i));
            }
        }
        for (const auto& c : chains)
            for (std::size_t s = 0; s + 1 < c.size(); ++s) seg_len.push_back((rigid[c[s + 1]] - rigid[c[s]]).norm());
        for (auto [a1, b1] : ribs) rib_len.push_back((rigid[a1] - rigid[b1]).norm());
    }

    Eigen::VectorXd pack(const std::vector<Eigen::Vector2d>& nodes) const {
        Eigen::VectorXd x(ndof);
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (dof[k] >= 0) x.segment<2>(dof[k]) = nodes[k];
        return x;
    }

    std::vector<Eigen::Vector2d> unpack(const Eigen::VectorXd& x) const {
        std::vector<Eigen::Vector2d> p = rigid;
        for (std::size_t k = 0; k < p.size(); ++k)
            if (dof[k] >= 0) p[k] = x.segment<2>(dof[k]);
        return p;
    }

    void add(Eigen::VectorXd& g, int node, const Eigen::Vector2d& v) const {
        if (dof[node] >= 0) g.segment<2>(dof[node]) += v;
    }

    double energy(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const auto p = unpack(x);
        if (grad) grad->setZero(ndof);
        double e = 0.0;
        std::size_t si = 0;
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& ch = chains[c];
            for (std::size_t s = 0; s + 1 < ch.size(); ++s, ++si) {
                const Eigen::Vector2d d = p[ch[s + 1]] - p[ch[s]];
                const double len = d.norm();
                const double st = len - seg_len[si];
                e += 0.5 * m.axial_stiffness * st * st;
                if (grad) {
                    const Eigen::Vector2d f = m.axial_stiffness * st * d / len;
                    add(*grad, ch[s + 1], f);
                    add(*grad, ch[s], -f);
                }
            }
            // joint k sits at ch[k]; the base joint compares against the clamp
            for (std::size_t k = 0; k + 1 < ch.size(); ++k) {
                const Eigen::Vector2d v = p[ch[k + 1]] - p[ch[k]];
                const Eigen::Vector2d u = k == 0 ? base_dir[c] : Eigen::Vector2d(p[ch[k]] - p[ch[k - 1]]);
                const double bend = wrap(std::atan2(v.y(), v.x()) - std::atan2(u.y(), u.x()));
                e += 0.5 * m.joint_stiffness * bend * bend;
                if (grad) {
                    const double t = m.joint_stiffness * bend;
                    const Eigen::Vector2d gv = angle_grad(v);
                    add(*grad, ch[k + 1], t * gv);
                    add(*grad, ch[k], -t * gv);
                    if (k > 0) {
                        const Eigen::Vector2d gu = angle_grad(u);
                        add(*grad, ch[k], -t * gu);
                        add(*grad, ch[k - 1], t * gu);
                    }
                }
            }
        }
        for (std::size_t r = 0; r < ribs.size(); ++r) {
            const Eigen::Vector2d d = p[ribs[r].second] - p[ribs[r].first];
            const double len = d.norm();
            const double st = len - rib_len[r];
            e += 0.5 * m.rib_stiffness * st * st;
            if (grad) {
                const Eigen::Vector2d f = m.rib_stiffness * st * d / len;
                add(*grad, ribs[r].second, f);
                add(*grad, ribs[r].first, -f);
            }
        }
        if (obj)
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double depth = -obj->sdf(p[k]);
                if (depth <= 0.0) continue;
                e += 0.5 * m.contact_penalty * depth * depth;
                if (grad) add(*grad, static_cast<int>(k), -m.contact_penalty * depth * obj->sdf_gradient(p[k]));
            }
        if (m.tip_load != 0.0) {
            const int per = fr.per_finger();
            const int tl = fr.front(fr.n), tr = per + fr.front(fr.n);
            e -= m.tip_load * (p[tl].x() - p[tr].x());
            if (grad) {
                add(*grad, tl, Eigen::Vector2d(-m.tip_load, 0.0));
                add(*grad, tr, Eigen::Vector2d(m.tip_load, 0.0));
            }
        }
        return e;
    }

    ComplianceResult solve(Eigen::VectorXd x, bool keep_trace) const {
        ComplianceResult r;
        Eigen::VectorXd g(ndof), g_new(ndof), x_new(ndof);
        double e = energy(x, &g);
        double step = 1e-3;
        Eigen::VectorXd x_prev, g_prev;
        int it = 0;
        if (keep_trace) r.energy_trace.push_back(e);
        while (g.lpNorm<Eigen::Infinity>() > m.tolerance && it < m.max_iterations) {
            if (it > 0) {
                // Barzilai-Borwein initial step
                const Eigen::VectorXd s = x - x_prev, y = g - g_prev;
                const double sy = s.dot(y);
                step = sy > 0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e3) : 1e-3;
            }
            const double gg = g.squaredNorm();
            double t = step;
            double e_new = 0.0;
            for (int bt = 0;; ++bt) {
                x_new = x - t * g;
                e_new = energy(x_new, &g_new);
                if (e_new <= e - 1e-4 * t * gg) break;
                // once the predicted decrease drops below the energy's
                // rounding level, accept steps that shrink the gradient
                const double resolution = 1e-13 * std::max(1.0, std::abs(e));
                if (1e-4 * t * gg < resolution && e_new <= e + resolution &&
                    g_new.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>())
                    break;
                t *= 0.5;
                if (bt > 60) {
                    // no decrease representable at this precision
                    x_new = x;
                    e_new = e;
                    g_new = g;
                    break;
                }
            }
            ++it;
            if (x_new == x) break;
            x_prev = x;
            g_prev = g;
            x = x_new;
            g = g_new;
            e = e_new;
            if (keep_trace) r.energy_trace.push_back(e);
        }
        r.iterations = it;
        r.energy = e;
        r.gradient_norm = g.lpNorm<Eigen::Infinity>();
        r.converged = r.gradient_norm <= m.tolerance;
        r.nodes = unpack(x);
        for (std::size_t k = 0; k < r.nodes.size(); ++k)
            r.max_deformation = std::max(r.max_deformation, (r.nodes[k] - rigid[k]).norm());
        if (obj)
            for (const auto& p : r.nodes) {
                const double depth = -obj->sdf(p);
                if (depth <= 0.0) continue;
                ++r.contact_point_count;
                r.total_contact_force += m.contact_penalty * depth;
                r.max_penetration = std::max(r.max_penetration, depth);
            }
        const int tip = fr.front(fr.n);
        r.tip_deflection = r.nodes[tip].x() - rigid[tip].x();
        return r;
    }
};

void check_placement(const FinRayModel& m, const ObjectPrimitive& obj) {
    if (!(obj.characteristic_radius > 0.0)) throw Error("InvalidPlacement", "object radius must be positive");
    for (const auto& p : actuated_shape(m, 0.0))
        if (obj.sdf(p) < 0.0) throw Error("InvalidPlacement", "object penetrates the rest shape");
}

} // namespace

std::vector<Eigen::Vector2d> actuated_shape(const FinRayModel& m, double actuation) {
    validate_model(m);
    const auto left = rest_left(m);
    const Eigen::Vector2d pivot = left[0];
    std::vector<Eigen::Vector2d> out;
    out.reserve(2 * left.size());
    // left finger turns clockwise so its tip swings toward +x
    for (const auto& p : left) out.push_back(pivot + rotate(p - pivot, -actuation));
    for (std::size_t k = 0; k < left.size(); ++k) out.emplace_back(-out[k].x(), out[k].y());
    return out;
}

ComplianceResult solve_equilibrium(const FinRayModel& model, const ObjectPrimitive& object, double actuation,
                                   bool keep_energy_trace) {
    if (!(actuation >= 0.0)) throw Error("InvalidArgument", "actuation must be non-negative");
    validate_model(model);
    check_placement(model, object);
    const Problem pb(model, &object, actuation);
    return pb.solve(pb.pack(pb.rigid), keep_energy_trace);
}

ComplianceResult solve_equilibrium(const FinRayModel& model, double actuation, bool keep_energy_trace) {
    if (!(actuation >= 0.0)) throw Error("InvalidArgument", "actuation must be non-negative");
    validate_model(model);
    const Problem pb(model, nullptr, actuation);
    return pb.solve(pb.pack(pb.rigid), keep_energy_trace);
}

std::vector<ComplianceResult> contact_force_profile(const FinRayModel& model, const ObjectPrimitive& object,
                                                    const std::vector<double>& schedule) {
    for (std::size_t k = 1; k < schedule.size(); ++k)
        if (schedule[k] < schedule[k - 1]) throw Error("InvalidArgument", "schedule must be non-decreasing");
    validate_model(model);
    check_placement(model, object);
    std::vector<ComplianceResult> out;
    std::optional<std::vector<Eigen::Vector2d>> prev;
    double prev_a = 0.0;
    const FinRayFrame fr{model.n_segments};
    for (double a : schedule) {
        if (!(a >= 0.0)) throw Error("InvalidArgument", "actuation must be non-negative");
        const Problem pb(model, &object, a);
        std::vector<Eigen::Vector2d> start = pb.rigid;
        if (prev) {
            start = *prev;
            const int per = fr.per_finger();
            for (int f = 0; f < 2; ++f) {
                const Eigen::Vector2d pivot = start[f * per];
                const double da = (f == 0 ? -1.0 : 1.0) * (a - prev_a);
                for (int k = 0; k < per; ++k)
                    start[f * per + k] = pivot + rotate(start[f * per + k] - pivot, da);
            }
        }
        ComplianceResult r = pb.solve(pb.pack(start), false);
        if (!r.converged)
            throw Error("NonConvergence", "iteration cap reached at actuation " + std::to_string(a));
        prev = r.nodes;
        prev_a = a;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace finray
