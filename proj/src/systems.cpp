#include "regulus/systems.hpp"

#include <cmath>

#include "regulus/errors.hpp"

namespace regulus {

namespace {

Eigen::Vector3d v3(const Vec& y, int off) { return {y(off), y(off + 1), y(off + 2)}; }
Eigen::Vector4d v4(const Vec& y, int off) { return {y(off), y(off + 1), y(off + 2), y(off + 3)}; }

const Eigen::Vector3d kAxis(1.0, 0.0, 0.0);

void require_dim(const SystemSpec& spec, const Vec& y) {
    if (y.size() != state_dim(spec.kind))
        throw DomainError("state for " + system_name(spec.kind) + " must have " +
                          std::to_string(state_dim(spec.kind)) + " components");
}

double sq(double x) { return x * x; }

}  // namespace

std::string system_name(SystemKind k) {
    switch (k) {
        case SystemKind::hooke4: return "hooke4";
        case SystemKind::kepler3: return "kepler3";
        case SystemKind::kepler3_reparam: return "kepler3_reparam";
        case SystemKind::twocenter3: return "twocenter3";
        case SystemKind::twocenter_transformed: return "twocenter_transformed";
        case SystemKind::ktilde_spherical: return "ktilde_spherical";
        case SystemKind::lagrange3: return "lagrange3";
    }
    return "unknown";
}

SystemKind parse_system(const std::string& name) {
    if (name == "hooke4" || name == "hooke") return SystemKind::hooke4;
    if (name == "kepler3" || name == "kepler") return SystemKind::kepler3;
    if (name == "kepler3_reparam") return SystemKind::kepler3_reparam;
    if (name == "twocenter3" || name == "twocenter") return SystemKind::twocenter3;
    if (name == "twocenter_transformed") return SystemKind::twocenter_transformed;
    if (name == "ktilde_spherical" || name == "ktilde") return SystemKind::ktilde_spherical;
    if (name == "lagrange3" || name == "lagrange") return SystemKind::lagrange3;
    throw UsageError("unknown system kind '" + name + "'");
}

int config_dim(SystemKind k) {
    switch (k) {
        case SystemKind::hooke4:
        case SystemKind::twocenter_transformed: return 4;
        default: return 3;
    }
}

int state_dim(SystemKind k) { return k == SystemKind::ktilde_spherical ? 7 : 2 * config_dim(k); }

void check_regular(const SystemSpec& spec, const Vec& y) {
    require_dim(spec, y);
    const double ex = spec.exclusion;
    switch (spec.kind) {
        case SystemKind::hooke4: return;
        case SystemKind::kepler3:
        case SystemKind::kepler3_reparam:
            if (v3(y, 0).norm() < ex) throw SingularError("Kepler collision");
            return;
        case SystemKind::twocenter3:
        case SystemKind::lagrange3: {
            const Eigen::Vector3d x = v3(y, 0);
            if ((x - kAxis).norm() < ex || (x + kAxis).norm() < ex) throw SingularError("two-center collision");
            return;
        }
        case SystemKind::twocenter_transformed:
            if (std::sqrt(sq(y(1)) + sq(y(2)) + sq(y(3))) < ex) throw SingularError("z on the real line");
            return;
        case SystemKind::ktilde_spherical: {
            const double r = y(0), psi = y(1), pk = y(5);
            if (!(r > ex)) throw SingularError("r must be positive");
            if (std::abs(r - 1.0) < ex && pk != 0.0) throw SingularError("r = 1 with nonzero P_kappa");
            if (std::abs(std::sin(psi)) < ex) throw SingularError("psi in {0, pi}");
            return;
        }
    }
}

double ktilde1(const SystemSpec& s, double r, double P_r, double P_kappa) {
    const double r2 = r * r;
    const double A = sq(r2 - 1.0) / (4.0 * r2);
    const double barrier = P_kappa == 0.0 ? 0.0 : 2.0 * r2 * P_kappa * P_kappa / sq(r2 - 1.0);
    return r2 * P_r * P_r / 2.0 + barrier + (s.m1 + s.m2) * (r2 + 1.0) / (2.0 * r) -
           s.f * sq(r2 + 1.0) / (4.0 * r2) + s.m0 * (A * A + A);
}

double ktilde2(const SystemSpec& s, double psi, double P_psi, double P_kappa) {
    const double c = std::cos(psi), sn = std::sin(psi);
    const double barrier = P_kappa == 0.0 ? 0.0 : P_kappa * P_kappa / (2.0 * sn * sn);
    return P_psi * P_psi / 2.0 + barrier + s.f * c * c + (s.m1 - s.m2) * c + s.m0 * c * c * sn * sn;
}

double ktilde_clock_rate(double r, double psi) {
    const double r2 = r * r;
    return (sq(r2 - 1.0) + 4.0 * r2 * sq(std::sin(psi))) / (4.0 * r2);
}

double twocenter_energy(const SystemSpec& s, const PureQuaternion& x, const PureQuaternion& y) {
    const PureQuaternion e{1.0, 0.0, 0.0};
    return norm_sq(y) / 2.0 + s.m0 * norm_sq(x) + s.m1 / norm(x - e) + s.m2 / norm(x + e) - s.f;
}

double eval_h(const SystemSpec& s, const Vec& y) {
    check_regular(s, y);
    switch (s.kind) {
        case SystemKind::hooke4: return v4(y, 4).squaredNorm() / 8.0 + s.f * v4(y, 0).squaredNorm() + s.m;
        case SystemKind::kepler3: return v3(y, 3).squaredNorm() / 2.0 + s.m / v3(y, 0).norm() + s.f;
        case SystemKind::kepler3_reparam: {
            const double q = v3(y, 0).norm();
            return v3(y, 3).squaredNorm() * q / 2.0 + s.m + s.f * q;
        }
        case SystemKind::twocenter3:
        case SystemKind::lagrange3:
            return twocenter_energy(s, {y(0), y(1), y(2)}, {y(3), y(4), y(5)});
        case SystemKind::twocenter_transformed: {
            const double d = 2.0 * std::sqrt(sq(y(1)) + sq(y(2)) + sq(y(3)));
            const double ap = sq(y(0)) + sq(y(1) + 1.0) + sq(y(2)) + sq(y(3));
            const double am = sq(y(0)) + sq(y(1) - 1.0) + sq(y(2)) + sq(y(3));
            return v4(y, 4).squaredNorm() / 8.0 + (s.m1 * ap + s.m2 * am) / (d * d * d) - s.f * am * ap / sq(d * d);
        }
        case SystemKind::ktilde_spherical:
            return ktilde1(s, y(0), y(3), y(5)) + ktilde2(s, y(1), y(4), y(5));
    }
    return 0.0;
}

Vec eval_grad(const SystemSpec& s, const Vec& y) {
    check_regular(s, y);
    Vec g = Vec::Zero(y.size());
    switch (s.kind) {
        case SystemKind::hooke4:
            g.segment<4>(0) = 2.0 * s.f * v4(y, 0);
            g.segment<4>(4) = v4(y, 4) / 4.0;
            break;
        case SystemKind::kepler3: {
            const Eigen::Vector3d q = v3(y, 0);
            const double n = q.norm();
            g.segment<3>(0) = -s.m * q / (n * n * n);
            g.segment<3>(3) = v3(y, 3);
            break;
        }
        case SystemKind::kepler3_reparam: {
            const Eigen::Vector3d q = v3(y, 0), p = v3(y, 3);
            const double n = q.norm();
            g.segment<3>(0) = (p.squaredNorm() / 2.0 + s.f) * q / n;
            g.segment<3>(3) = n * p;
            break;
        }
        case SystemKind::twocenter3:
        case SystemKind::lagrange3: {
            const Eigen::Vector3d x = v3(y, 0);
            const Eigen::Vector3d a = x - kAxis, b = x + kAxis;
            const double na = a.norm(), nb = b.norm();
            g.segment<3>(0) = -s.m1 * a / (na * na * na) - s.m2 * b / (nb * nb * nb) + 2.0 * s.m0 * x;
            g.segment<3>(3) = v3(y, 3);
            break;
        }
        case SystemKind::twocenter_transformed: {
            const Eigen::Vector4d z = v4(y, 0);
            const double rho = std::sqrt(sq(z(1)) + sq(z(2)) + sq(z(3)));
            const double d = 2.0 * rho;
            const Eigen::Vector4d zp = z + Eigen::Vector4d(0, 1, 0, 0), zm = z - Eigen::Vector4d(0, 1, 0, 0);
            const double ap = zp.squaredNorm(), am = zm.squaredNorm();
            const Eigen::Vector4d dap = 2.0 * zp, dam = 2.0 * zm;
            const Eigen::Vector4d dd = Eigen::Vector4d(0.0, z(1), z(2), z(3)) * (2.0 / rho);
            const double d3 = d * d * d, d4 = d3 * d, d5 = d4 * d;
            g.segment<4>(0) = (s.m1 * dap + s.m2 * dam) / d3 - 3.0 * (s.m1 * ap + s.m2 * am) * dd / d4 -
                              s.f * ((ap * dam + am * dap) / d4 - 4.0 * am * ap * dd / d5);
            g.segment<4>(4) = v4(y, 4) / 4.0;
            break;
        }
        case SystemKind::ktilde_spherical: {
            const double r = y(0), psi = y(1), pr = y(3), pp = y(4), pk = y(5);
            const double r2 = r * r, u = r2 - 1.0;
            const double c = std::cos(psi), sn = std::sin(psi);
            const double A = u * u / (4.0 * r2);
            const double dA = (r - 1.0 / r) * (1.0 + 1.0 / r2) / 2.0;
            const double kbar = pk == 0.0 ? 0.0 : -4.0 * r * (r2 + 1.0) * pk * pk / (u * u * u);
            g(0) = r * pr * pr + kbar + (s.m1 + s.m2) * (1.0 - 1.0 / r2) / 2.0 -
                   s.f * (r + 1.0 / r) * (1.0 - 1.0 / r2) / 2.0 + s.m0 * (2.0 * A + 1.0) * dA;
            g(1) = (pk == 0.0 ? 0.0 : -pk * pk * c / (sn * sn * sn)) - 2.0 * s.f * c * sn - (s.m1 - s.m2) * sn +
                   s.m0 * std::sin(2.0 * psi) * std::cos(2.0 * psi);
            g(2) = 0.0;
            g(3) = r2 * pr;
            g(4) = pp;
            g(5) = pk == 0.0 ? 0.0 : pk / (sn * sn) + 4.0 * r2 * pk / (u * u);
            break;
        }
    }
    return g;
}

Vec vector_field(const SystemSpec& s, const Vec& y) {
    const Vec g = eval_grad(s, y);
    const int n = config_dim(s.kind);
    Vec v = Vec::Zero(y.size());
    v.segment(0, n) = g.segment(n, n);
    v.segment(n, n) = -g.segment(0, n);
    if (s.kind == SystemKind::ktilde_spherical) v(6) = ktilde_clock_rate(y(0), y(1));
    return v;
}

Eigen::MatrixXd kinetic_inverse_metric(const SystemSpec& s, const Vec& y) {
    const int n = config_dim(s.kind);
    switch (s.kind) {
        case SystemKind::hooke4:
        case SystemKind::twocenter_transformed: return Eigen::MatrixXd::Identity(n, n) / 4.0;
        case SystemKind::kepler3_reparam: return Eigen::MatrixXd::Identity(n, n) * v3(y, 0).norm();
        case SystemKind::ktilde_spherical: {
            const double r = y(0), sn = std::sin(y(1)), u = r * r - 1.0;
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
            m(0, 0) = r * r;
            m(1, 1) = 1.0;
            m(2, 2) = 1.0 / (sn * sn) + 4.0 * r * r / (u * u);
            return m;
        }
        default: return Eigen::MatrixXd::Identity(n, n);
    }
}

std::vector<ConservedQuantity> conserved_set(const SystemSpec& spec) {
    std::vector<ConservedQuantity> out;
    const SystemSpec s = spec;
    auto angular = [&](const char* name, int k) {
        out.push_back({name, [k](const Vec& y) { return v3(y, 0).cross(v3(y, 3))(k); }});
    };
    switch (s.kind) {
        case SystemKind::hooke4:
            out.push_back({"H", [s](const Vec& y) { return eval_h(s, y); }});
            out.push_back({"BL", [](const Vec& y) {
                               return bl({y(0), y(1), y(2), y(3)}, {y(4), y(5), y(6), y(7)});
                           }});
            break;
        case SystemKind::kepler3:
        case SystemKind::kepler3_reparam:
            out.push_back({s.kind == SystemKind::kepler3 ? "H" : "K", [s](const Vec& y) { return eval_h(s, y); }});
            angular("L1", 0);
            angular("L2", 1);
            angular("L3", 2);
            break;
        case SystemKind::twocenter3:
        case SystemKind::lagrange3:
            out.push_back({"H", [s](const Vec& y) { return eval_h(s, y); }});
            angular("L1", 0);
            break;
        case SystemKind::twocenter_transformed:
            out.push_back({"K", [s](const Vec& y) { return eval_h(s, y); }});
            break;
        case SystemKind::ktilde_spherical:
            out.push_back({"Ktilde", [s](const Vec& y) { return eval_h(s, y); }});
            out.push_back({"Ktilde1", [s](const Vec& y) { return ktilde1(s, y(0), y(3), y(5)); }});
            out.push_back({"Ktilde2", [s](const Vec& y) { return ktilde2(s, y(1), y(4), y(5)); }});
            out.push_back({"P_kappa", [](const Vec& y) { return y(5); }});
            break;
    }
    return out;
}

Trajectory integrate(const SystemSpec& spec, const Vec& y0, double t0, double t1, const TrajectoryOptions& opts) {
    check_regular(spec, y0);
    const SystemSpec s = spec;
    RhsFn f = [s](double, const Vec& y) {
        check_regular(s, y);
        return vector_field(s, y);
    };
    Trajectory tr = integrate_rhs(f, y0, t0, t1, opts.integrator, opts.output_times, opts.events);
    const double h0 = eval_h(spec, y0);
    double drift = 0.0;
    for (const auto& smp : tr.samples) drift = std::max(drift, std::abs(eval_h(spec, smp.y) - h0));
    tr.stats.max_energy_drift = drift;
    if (drift > opts.energy_drift_bound * (1.0 + std::abs(h0)))
        throw NumericalError("energy drift exceeds the configured bound", "drift=" + std::to_string(drift));
    return tr;
}

Trajectory kepler_reparam_flow(const Vec& y0, double m, double f, double t0, double t1, const TrajectoryOptions& opts) {
    SystemSpec s;
    s.kind = SystemKind::kepler3_reparam;
    s.m = m;
    s.f = f;
    if (std::abs(eval_h(s, y0)) > 1e-10) throw ConstraintError("reparametrized flow valid only on K = 0");
    return integrate(s, y0, t0, t1, opts);
}

Vec pack(const PhasePointH& p) {
    Vec y(8);
    y << p.z.z0, p.z.z1, p.z.z2, p.z.z3, p.w.z0, p.w.z1, p.w.z2, p.w.z3;
    return y;
}

Vec pack(const PhasePointIH& p) {
    Vec y(6);
    y << p.Q.q1, p.Q.q2, p.Q.q3, p.P.q1, p.P.q2, p.P.q3;
    return y;
}

Vec pack(const SphericalState& s, double clock) {
    Vec y(7);
    y << s.r, s.psi, s.kappa, s.P_r, s.P_psi, s.P_kappa, clock;
    return y;
}

PhasePointH unpack_h(const Vec& y) {
    if (y.size() < 8) throw DomainError("state too short for a point of T*H");
    return {{y(0), y(1), y(2), y(3)}, {y(4), y(5), y(6), y(7)}};
}

PhasePointIH unpack_ih(const Vec& y) {
    if (y.size() < 6) throw DomainError("state too short for a point of T*IH");
    return {{y(0), y(1), y(2)}, {y(3), y(4), y(5)}};
}

SphericalState unpack_spherical(const Vec& y) {
    if (y.size() < 6) throw DomainError("state too short for a spherical state");
    SphericalState s;
    s.r = y(0);
    s.psi = y(1);
    s.kappa = y(2);
    s.theta = 0.0;
    s.P_r = y(3);
    s.P_psi = y(4);
    s.P_kappa = y(5);
    s.P_theta = 0.0;
    return s;
}

}  // namespace regulus
