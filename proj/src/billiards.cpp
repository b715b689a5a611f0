#include "regulus/billiards.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "regulus/errors.hpp"

namespace regulus {

namespace {

PureQuaternion pq(const Vec& q) { return {q(0), q(1), q(2)}; }

Vec vec3(const PureQuaternion& p) {
    Vec v(3);
    v << p.q1, p.q2, p.q3;
    return v;
}

std::map<std::string, double> parse_params(const std::string& body, const std::string& whole) {
    std::map<std::string, double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("wall '" + whole + "': expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size())
            throw UsageError("wall '" + whole + "': value of '" + key + "' is not a number");
        out[key] = x;
    }
    return out;
}

double need(const std::map<std::string, double>& p, const std::string& key, const std::string& whole) {
    auto it = p.find(key);
    if (it == p.end()) throw UsageError("wall '" + whole + "': missing parameter '" + key + "'");
    return it->second;
}

}  // namespace

WallSurface wall_quadric4(const CenteredQuadric4& q) {
    WallSurface w;
    w.label = "quadric4";
    const Eigen::Matrix4d A = q.A;
    w.g = [A](const Vec& x) {
        const Eigen::Vector4d z = x.head<4>();
        return z.dot(A * z) - 1.0;
    };
    w.grad = [A](const Vec& x) {
        const Eigen::Vector4d z = x.head<4>();
        return Vec(2.0 * A * z);
    };
    w.quadric4 = q;
    return w;
}

WallSurface wall_focused(const FocusedQuadric3& q) {
    WallSurface w;
    w.label = kind_name(q.kind);
    w.g = [q](const Vec& x) { return q.wall(pq(x)); };
    w.grad = [q](const Vec& x) { return vec3(q.wall_grad(pq(x))); };
    w.focused = q;
    return w;
}

WallSurface wall_coordinate(int index, double value, const std::string& label) {
    WallSurface w;
    w.label = label;
    w.g = [index, value](const Vec& x) { return x(index) - value; };
    w.grad = [index](const Vec& x) {
        Vec n = Vec::Zero(x.size() >= 3 ? 3 : x.size());
        n(index) = 1.0;
        return n;
    };
    return w;
}

WallSurface wall_round_sphere(double R) {
    if (!(R > 0.0)) throw DomainError("sphere radius must be positive");
    WallSurface w;
    w.label = "sphere";
    w.g = [R](const Vec& x) { return x.squaredNorm() / (R * R) - 1.0; };
    w.grad = [R](const Vec& x) { return Vec(2.0 * x / (R * R)); };
    return w;
}

WallSurface wall_axial_cone(double psi0) {
    if (!(psi0 > 0.0 && psi0 < 3.14159265358979323846)) throw DomainError("cone angle must lie in (0, pi)");
    WallSurface w;
    w.label = "cone";
    const double c = std::cos(psi0);
    // x1 - cos(psi0)|x|: positive inside the cone around +i
    w.g = [c](const Vec& x) { return x(0) - c * x.head<3>().norm(); };
    w.grad = [c](const Vec& x) {
        const Eigen::Vector3d v = x.head<3>();
        Vec n = Vec(-c * v / v.norm());
        n(0) += 1.0;
        return n;
    };
    return w;
}

WallSurface parse_wall(const std::string& shorthand, SystemKind kind) {
    const auto colon = shorthand.find(':');
    const std::string type = shorthand.substr(0, colon);
    const auto p = parse_params(colon == std::string::npos ? "" : shorthand.substr(colon + 1), shorthand);
    const bool chart = kind == SystemKind::ktilde_spherical;
    const int dim = config_dim(kind);
    try {
        if (type == "sphere") {
            const double r = need(p, "r", shorthand);
            if (chart) return wall_coordinate(0, r, "sphere:r=" + std::to_string(r));
            return wall_round_sphere(r);
        }
        if (type == "cone") {
            const double psi = need(p, "psi", shorthand);
            if (chart) return wall_coordinate(1, psi, "cone:psi=" + std::to_string(psi));
            if (dim != 3) throw UsageError("cone walls need a 3-dimensional system");
            return wall_axial_cone(psi);
        }
        if (type == "spheroid" || type == "hyperboloid") {
            if (dim != 3 || chart) throw UsageError("r-confocal walls need a Cartesian 3-dimensional system");
            if (type == "spheroid") return wall_focused(rconfocal_spheroid(need(p, "b", shorthand)));
            const double sheet = p.count("sheet") ? p.at("sheet") : 1.0;
            return wall_focused(rconfocal_hyperboloid(need(p, "a", shorthand), sheet >= 0.0 ? 1 : -1));
        }
        if (type == "quadric4") {
            if (dim != 4) throw UsageError("quadric4 walls need a 4-dimensional system");
            const double A = need(p, "A", shorthand), B = need(p, "B", shorthand);
            const double sA = p.count("sA") ? p.at("sA") : 1.0;
            const double sB = p.count("sB") ? p.at("sB") : 1.0;
            if (!(A > 0.0 && B > 0.0)) throw DomainError("quadric4 semi-axes must be positive");
            return wall_quadric4({u_coordinate_form((sA >= 0 ? 1.0 : -1.0) / (A * A), (sB >= 0 ? 1.0 : -1.0) / (B * B))});
        }
    } catch (const DomainError& e) {
        throw UsageError("wall '" + shorthand + "': " + e.what());
    }
    throw UsageError("unknown wall type '" + type + "'");
}

Vec reflect_velocity(const Vec& v, const Vec& n) {
    const double nn = n.squaredNorm();
    if (nn == 0.0) throw DomainError("reflection normal is zero");
    return v - 2.0 * (v.dot(n) / nn) * n;
}

Vec reflect_momentum(const Vec& p, const Vec& n, const Eigen::MatrixXd& M) {
    const Vec Mn = M * n;
    const double nMn = n.dot(Mn);
    if (!(nMn > 0.0)) throw DomainError("reflection normal is zero");
    return p - 2.0 * (n.dot(M * p) / nMn) * n;
}

std::string termination_name(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::grazing: return "grazing";
        case Termination::corner: return "corner";
        case Termination::singular: return "singular";
    }
    return "unknown";
}

std::vector<Sample> BilliardOrbit::samples() const {
    std::vector<Sample> out;
    for (const auto& a : arcs) out.insert(out.end(), a.begin(), a.end());
    return out;
}

double BilliardOrbit::max_relative_drift(std::size_t k) const {
    if (arc_table.empty() || k >= conserved_names.size()) return 0.0;
    const double q0 = arc_table.front().start[k];
    double d = 0.0;
    for (const auto& a : arc_table) {
        d = std::max(d, std::abs(a.start[k] - q0));
        d = std::max(d, std::abs(a.end[k] - q0));
    }
    return d / (1.0 + std::abs(q0));
}

BilliardOrbit run_billiard(const BilliardSpec& spec, const Vec& state0) {
    const SystemSpec sys = spec.system;
    const int n = config_dim(sys.kind);
    check_regular(sys, state0);
    if (spec.walls.empty()) throw DomainError("billiard needs at least one wall");

    std::vector<int> side(spec.walls.size());
    for (std::size_t w = 0; w < spec.walls.size(); ++w) {
        const double g0 = spec.walls[w].g(state0.head(n));
        if (!(std::abs(g0) > spec.event_tol))
            throw DomainError("initial state lies on wall '" + spec.walls[w].label + "'");
        side[w] = g0 > 0.0 ? 1 : -1;
    }

    BilliardOrbit orbit;
    orbit.kind = sys.kind;
    const auto cons = conserved_set(sys);
    for (const auto& c : cons) orbit.conserved_names.push_back(c.name);
    auto values = [&](const Vec& y) {
        std::vector<double> v;
        for (const auto& c : cons) v.push_back(c.eval(y));
        return v;
    };

    const double t0 = 0.0;
    const double t_end = std::isfinite(spec.max_time) ? spec.max_time : 1e300;
    RhsFn rhs = [sys](double, const Vec& y) {
        check_regular(sys, y);
        return vector_field(sys, y);
    };
    Stepper st(rhs, t0, state0, t_end, spec.integrator);

    const bool use_outputs = !spec.output_times.empty();
    std::size_t next_out = 0;
    auto emit_outputs_until = [&](double t_hi, std::vector<Sample>& arc) {
        while (next_out < spec.output_times.size() && spec.output_times[next_out] <= t_hi) {
            const double to = spec.output_times[next_out++];
            if (to < st.t_old()) continue;
            arc.push_back({to, to == st.t() ? st.y() : st.refine(to)});
        }
    };

    orbit.arcs.emplace_back();
    if (!use_outputs || spec.output_times.front() == t0) orbit.arcs.back().push_back({t0, state0});
    if (use_outputs && spec.output_times.front() == t0) ++next_out;
    orbit.arc_table.push_back({t0, t0, values(state0), values(state0)});

    bool skip_initial = false;
    int reflections = 0;
    while (reflections < spec.max_reflections && !st.finished()) {
        try {
            st.step();
        } catch (const SingularError& e) {
            orbit.termination = Termination::singular;
            orbit.message = e.what();
            break;
        }

        std::optional<Crossing> first;
        int first_wall = -1;
        try {
            for (std::size_t w = 0; w < spec.walls.size(); ++w) {
                const auto& wall = spec.walls[w];
                auto c = find_crossing(
                    st, [&wall, n](double, const Vec& y) { return wall.g(y.head(n)); }, side[w], skip_initial,
                    spec.event_tol);
                if (c && (!first || c->t < first->t)) {
                    first = c;
                    first_wall = static_cast<int>(w);
                }
            }
        } catch (const SingularError& e) {
            orbit.termination = Termination::singular;
            orbit.message = e.what();
            break;
        }

        auto& arc = orbit.arcs.back();
        if (!first) {
            if (use_outputs)
                emit_outputs_until(st.t(), arc);
            else
                arc.push_back({st.t(), st.y()});
            orbit.arc_table.back().t_end = st.t();
            orbit.arc_table.back().end = values(st.y());
            skip_initial = false;
            continue;
        }

        const double te = first->t;
        const Vec ye = first->y;
        if (use_outputs) emit_outputs_until(te, arc);
        arc.push_back({te, ye});
        orbit.arc_table.back().t_end = te;
        orbit.arc_table.back().end = values(ye);

        for (std::size_t w = 0; w < spec.walls.size(); ++w) {
            if (static_cast<int>(w) == first_wall) continue;
            if (std::abs(spec.walls[w].g(ye.head(n))) <= spec.corner_tol) {
                orbit.termination = Termination::corner;
                orbit.message = "corner between walls '" + spec.walls[first_wall].label + "' and '" +
                                spec.walls[w].label + "'";
            }
        }
        if (orbit.termination == Termination::corner) break;

        const Vec nrm = spec.walls[first_wall].grad(ye.head(n));
        const Eigen::MatrixXd M = kinetic_inverse_metric(sys, ye);
        const Vec p = ye.segment(n, n);
        const double vn = nrm.dot(M * p);
        const double vv = std::sqrt(std::max(0.0, p.dot(M * p)));
        const double nn = std::sqrt(std::max(0.0, nrm.dot(M * nrm)));
        if (std::abs(vn) < spec.grazing_tol * vv * nn) {
            orbit.termination = Termination::grazing;
            orbit.message = "tangential impact on wall '" + spec.walls[first_wall].label + "'";
            break;
        }

        ReflectionEvent ev;
        ev.t = te;
        ev.wall = first_wall;
        ev.before = ye;
        ev.after = ye;
        ev.after.segment(n, n) = reflect_momentum(p, nrm, M);
        ev.v_in = M * p;
        ev.v_out = M * ev.after.segment(n, n);
        ev.normal = nrm;
        ev.g = first->g;
        orbit.events.push_back(ev);
        ++reflections;

        orbit.arcs.emplace_back();
        orbit.arcs.back().push_back({te, ev.after});
        orbit.arc_table.push_back({te, te, values(ev.after), values(ev.after)});
        if (reflections >= spec.max_reflections) break;
        try {
            st.restart(te, ev.after);
        } catch (const SingularError& e) {
            orbit.termination = Termination::singular;
            orbit.message = e.what();
            break;
        }
        skip_initial = true;
    }
    orbit.stats = st.stats();
    return orbit;
}

void require_complete(const BilliardOrbit& orbit) {
    switch (orbit.termination) {
        case Termination::completed: return;
        case Termination::grazing: throw GrazingError(orbit.message);
        case Termination::corner: throw CornerError(orbit.message);
        case Termination::singular: throw SingularError(orbit.message);
    }
}

BilliardOrbit push_orbit_ks(const BilliardOrbit& orbit, double tol) {
    if (orbit.kind != SystemKind::hooke4) throw DomainError("push_orbit_ks needs a hooke4 orbit");
    auto map = [tol](const Vec& y) {
        const PhasePointH p = unpack_h(y);
        try {
            return pack(ks_forward(p, KsMode::restricted, tol));
        } catch (const ConstraintError&) {
            throw ConstraintError("orbit drifted off Σ¹: |BL| = " + std::to_string(std::abs(bl(p.z, p.w))));
        }
    };
    SystemSpec target;
    target.kind = SystemKind::kepler3_reparam;

    BilliardOrbit out;
    out.kind = SystemKind::kepler3_reparam;
    out.termination = orbit.termination;
    out.message = orbit.message;
    out.stats = orbit.stats;
    for (const auto& arc : orbit.arcs) {
        out.arcs.emplace_back();
        for (const auto& s : arc) out.arcs.back().push_back({s.t, map(s.y)});
    }
    for (const auto& e : orbit.events) {
        ReflectionEvent r;
        r.t = e.t;
        r.wall = e.wall;
        r.before = map(e.before);
        r.after = map(e.after);
        const Eigen::MatrixXd M = kinetic_inverse_metric(target, r.before);
        r.v_in = M * r.before.segment(3, 3);
        r.v_out = M * r.after.segment(3, 3);
        const Quaternion z = unpack_h(e.before).z;
        const Quaternion N{e.normal(0), e.normal(1), e.normal(2), e.normal(3)};
        r.normal = vec3(imag(2.0 * mul(mul(conj(z), kI), N)));
        r.g = e.g;
        out.events.push_back(r);
    }
    return out;
}

BilliardOrbit push_orbit_bw(const BilliardOrbit& orbit, const SystemSpec& target, double exclusion) {
    if (orbit.kind != SystemKind::ktilde_spherical) throw DomainError("push_orbit_bw needs a ktilde_spherical orbit");
    auto map = [exclusion](const Vec& y) {
        const PhasePointH p = spherical_to_phase(unpack_spherical(y), exclusion);
        const BwImage xy = bw_phase({p.z, p.w}, 1e-8, exclusion);
        return pack(PhasePointIH{xy.x, xy.y});
    };
    BilliardOrbit out;
    out.kind = target.kind;
    out.termination = orbit.termination;
    out.message = orbit.message;
    out.stats = orbit.stats;
    for (const auto& c : conserved_set(target)) out.conserved_names.push_back(c.name);
    const auto cons = conserved_set(target);
    auto values = [&](const Vec& y) {
        std::vector<double> v;
        for (const auto& c : cons) v.push_back(c.eval(y));
        return v;
    };
    for (const auto& arc : orbit.arcs) {
        out.arcs.emplace_back();
        for (const auto& s : arc) out.arcs.back().push_back({s.y(6), map(s.y)});
        if (!out.arcs.back().empty()) {
            const auto& a = out.arcs.back();
            out.arc_table.push_back({a.front().t, a.back().t, values(a.front().y), values(a.back().y)});
        }
    }
    for (const auto& e : orbit.events) {
        ReflectionEvent r;
        r.t = e.before(6);
        r.wall = e.wall;
        r.before = map(e.before);
        r.after = map(e.after);
        r.v_in = r.before.segment(3, 3);
        r.v_out = r.after.segment(3, 3);
        // the physical normal is parallel to the momentum jump
        const Vec jump = r.after.segment(3, 3) - r.before.segment(3, 3);
        r.normal = jump.norm() > 0.0 ? Vec(jump / jump.norm()) : jump;
        r.g = e.g;
        out.events.push_back(r);
    }
    return out;
}

}  // namespace regulus
