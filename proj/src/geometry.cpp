#include "regulus/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "regulus/errors.hpp"
#include "regulus/rng.hpp"

namespace regulus {

namespace {

Eigen::Vector4d vec(const Quaternion& z) { return {z.z0, z.z1, z.z2, z.z3}; }

}  // namespace

Eigen::Matrix4d NormalForm::reconstruct() const {
    Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
    for (int k = 0; k < 4; ++k) d(k, k) = entries[k].eigenvalue;
    return basis * d * basis.transpose();
}

double CenteredQuadric4::eval(const Quaternion& z) const {
    const Eigen::Vector4d v = vec(z);
    return v.dot(A * v) - 1.0;
}

Quaternion CenteredQuadric4::grad(const Quaternion& z) const {
    const Eigen::Vector4d g = 2.0 * A * vec(z);
    return {g(0), g(1), g(2), g(3)};
}

NormalForm normal_form(const Eigen::Matrix4d& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(A);
    const Eigen::Vector4d ev = es.eigenvalues();
    const Eigen::Matrix4d vecs = es.eigenvectors();

    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        const double ai = std::abs(ev(i)), aj = std::abs(ev(j));
        if (ai != aj) return ai > aj;
        return ev(i) > ev(j);
    });

    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    NormalForm nf;
    for (int k = 0; k < 4; ++k) {
        const int src = order[k];
        Eigen::Vector4d v = vecs.col(src);
        for (int c = 0; c < 4; ++c) {
            if (std::abs(v(c)) > 1e-14) {
                if (v(c) < 0.0) v = -v;
                break;
            }
        }
        nf.basis.col(k) = v;
        const double lam = ev(src);
        NormalFormEntry e;
        e.eigenvalue = lam;
        if (std::abs(lam) <= 1e-14 * scale) {
            e.sigma = 0;
            e.a = std::numeric_limits<double>::infinity();
        } else {
            e.sigma = lam > 0.0 ? 1 : -1;
            e.a = 1.0 / std::sqrt(std::abs(lam));
        }
        nf.entries[k] = e;
    }
    return nf;
}

Eigen::Matrix4d left_mul_i() {
    Eigen::Matrix4d L;
    // i (a + b i + c j + d k) = -b + a i - d j + c k
    L << 0, -1, 0, 0,
         1, 0, 0, 0,
         0, 0, 0, -1,
         0, 0, 1, 0;
    return L;
}

Eigen::Matrix4d hopf_component_matrix(int k) {
    Eigen::Matrix4d H = Eigen::Matrix4d::Zero();
    switch (k) {
        case 0:
            H.diagonal() << 1, 1, -1, -1;
            break;
        case 1:  // 2(z1 z2 - z0 z3)
            H(1, 2) = H(2, 1) = 1;
            H(0, 3) = H(3, 0) = -1;
            break;
        case 2:  // 2(z0 z2 + z1 z3)
            H(0, 2) = H(2, 0) = 1;
            H(1, 3) = H(3, 1) = 1;
            break;
        default:
            throw DomainError("hopf component index out of range");
    }
    return H;
}

bool is_s1_invariant(const Eigen::Matrix4d& A, double tol) {
    const Eigen::Matrix4d L = left_mul_i();
    return (L.transpose() * A + A * L).cwiseAbs().maxCoeff() <= tol;
}

S1Decomposition s1_decompose(const Eigen::Matrix4d& A) {
    S1Decomposition d;
    d.a = A.trace() / 4.0;
    for (int k = 0; k < 3; ++k) d.b[k] = (A.cwiseProduct(hopf_component_matrix(k))).sum() / 4.0;
    d.residual = (A - s1_form(d.a, d.b)).cwiseAbs().maxCoeff();
    return d;
}

Eigen::Matrix4d s1_form(double a, const PureQuaternion& b) {
    Eigen::Matrix4d A = a * Eigen::Matrix4d::Identity();
    for (int k = 0; k < 3; ++k) A += b[k] * hopf_component_matrix(k);
    return A;
}

Eigen::Matrix4d u_coordinate_form(double lam13, double lam24) {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4d U;  // columns: u1, u2, u3, u4 expressed in z-coordinates
    U.col(0) << s, 0, s, 0;
    U.col(1) << s, 0, -s, 0;
    U.col(2) << 0, s, 0, s;
    U.col(3) << 0, s, 0, -s;
    const Eigen::Vector4d d(lam13, lam24, lam13, lam24);
    return U * d.asDiagonal() * U.transpose();
}

CenteredQuadric4 dual_quadric(const CenteredQuadric4& q) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(q.A, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() >= 0.0) throw DomainError("dual is empty");
    return {-q.A};
}

std::string kind_name(FocusedQuadric3::Kind k) {
    switch (k) {
        case FocusedQuadric3::Kind::plane: return "plane";
        case FocusedQuadric3::Kind::centered_sphere: return "centered_sphere";
        case FocusedQuadric3::Kind::spheroid: return "spheroid";
        case FocusedQuadric3::Kind::hyperboloid_sheet: return "hyperboloid_sheet";
        case FocusedQuadric3::Kind::paraboloid: return "paraboloid";
    }
    return "unknown";
}

namespace {

struct AxisSplit {
    double s;      // axial coordinate relative to centre
    double perp2;  // squared distance from the axis
};

AxisSplit split(const FocusedQuadric3& q, const PureQuaternion& x) {
    const PureQuaternion v = x - q.center;
    const double s = dot(v, q.axis);
    return {s, std::max(0.0, norm_sq(v) - s * s)};
}

}  // namespace

double FocusedQuadric3::implicit(const PureQuaternion& x) const {
    const AxisSplit p = split(*this, x);
    switch (kind) {
        case Kind::plane: return p.s;
        case Kind::centered_sphere: return (p.s * p.s + p.perp2) / (semi_axis * semi_axis) - 1.0;
        case Kind::spheroid: return p.s * p.s / (semi_axis * semi_axis) + p.perp2 / (semi_minor * semi_minor) - 1.0;
        case Kind::hyperboloid_sheet:
            return p.s * p.s / (semi_axis * semi_axis) - p.perp2 / (semi_minor * semi_minor) - 1.0;
        case Kind::paraboloid: return (p.perp2 - 4.0 * focal * p.s) / (4.0 * focal * focal);
    }
    return 0.0;
}

std::vector<PureQuaternion> FocusedQuadric3::foci() const {
    switch (kind) {
        case Kind::plane: return {};
        case Kind::centered_sphere: return {center};
        case Kind::spheroid: {
            const double e = std::sqrt(std::max(0.0, semi_axis * semi_axis - semi_minor * semi_minor));
            return {center + e * axis, center - e * axis};
        }
        case Kind::hyperboloid_sheet: {
            const double e = std::sqrt(semi_axis * semi_axis + semi_minor * semi_minor);
            return {center + e * axis, center - e * axis};
        }
        case Kind::paraboloid: return {center + focal * axis};
    }
    return {};
}

bool FocusedQuadric3::on_branch(const PureQuaternion& x) const {
    if (kind != Kind::hyperboloid_sheet) return true;
    return sheet * dot(x - center, axis) > 0.0;
}

double FocusedQuadric3::wall(const PureQuaternion& x) const {
    if (kind == Kind::hyperboloid_sheet) {
        const double e = std::sqrt(semi_axis * semi_axis + semi_minor * semi_minor);
        const PureQuaternion near = center + (sheet * e) * axis;
        const PureQuaternion far = center - (sheet * e) * axis;
        return (norm(x - far) - norm(x - near)) / (2.0 * semi_axis) - 1.0;
    }
    return implicit(x);
}

PureQuaternion FocusedQuadric3::wall_grad(const PureQuaternion& x) const {
    const PureQuaternion v = x - center;
    const double s = dot(v, axis);
    const PureQuaternion perp = v - s * axis;
    switch (kind) {
        case Kind::plane: return axis;
        case Kind::centered_sphere: return (2.0 / (semi_axis * semi_axis)) * v;
        case Kind::spheroid:
            return (2.0 * s / (semi_axis * semi_axis)) * axis + (2.0 / (semi_minor * semi_minor)) * perp;
        case Kind::paraboloid: return (1.0 / (4.0 * focal * focal)) * (2.0 * perp - (4.0 * focal) * axis);
        case Kind::hyperboloid_sheet: {
            const double e = std::sqrt(semi_axis * semi_axis + semi_minor * semi_minor);
            const PureQuaternion dn = x - (center + (sheet * e) * axis);
            const PureQuaternion df = x - (center - (sheet * e) * axis);
            return (1.0 / (2.0 * semi_axis)) * (df / norm(df) - dn / norm(dn));
        }
    }
    return {};
}

FocusedQuadric3 hopf_image_classify(const CenteredQuadric4& q) {
    const S1Decomposition d = s1_decompose(q.A);
    const double scale = std::max(q.A.cwiseAbs().maxCoeff(), 1e-300);
    if (d.residual > 1e-10 * std::max(1.0, scale)) throw ConstraintError("quadric is not S^1-invariant");

    const double a = d.a;
    const double beta = norm(d.b);
    const double tol = 1e-12 * (std::abs(a) + beta);
    if (a + beta <= tol) throw DomainError("quadric is empty");

    FocusedQuadric3 f;
    f.focal_form = std::make_pair(a, d.b);
    const PureQuaternion n = beta > 0.0 ? d.b / beta : PureQuaternion{1.0, 0.0, 0.0};

    if (beta <= tol) {
        f.kind = FocusedQuadric3::Kind::centered_sphere;
        f.semi_axis = f.semi_minor = 1.0 / a;
        f.axis = n;
        return f;
    }
    if (std::abs(a) <= tol) {
        f.kind = FocusedQuadric3::Kind::plane;
        f.axis = n;
        f.center = (1.0 / beta) * n;
        return f;
    }
    if (std::abs(beta - a) <= tol) {
        const double ell = 1.0 / a;
        f.kind = FocusedQuadric3::Kind::paraboloid;
        f.axis = -n;
        f.center = (0.5 * ell) * n;
        f.focal = 0.5 * ell;
        return f;
    }
    if (beta < a) {
        const double ell = 1.0 / a, eps = beta / a, g = 1.0 - eps * eps;
        f.kind = FocusedQuadric3::Kind::spheroid;
        f.axis = n;
        f.semi_axis = ell / g;
        f.semi_minor = ell / std::sqrt(g);
        f.center = (-ell * eps / g) * n;
        return f;
    }
    if (beta > std::abs(a)) {
        const double ell = 1.0 / std::abs(a), eps = beta / std::abs(a), g = eps * eps - 1.0;
        f.kind = FocusedQuadric3::Kind::hyperboloid_sheet;
        f.axis = n;
        f.semi_axis = ell / g;
        f.semi_minor = ell / std::sqrt(g);
        f.center = (ell * eps / g) * n;
        f.sheet = a > 0.0 ? -1 : 1;
        return f;
    }
    throw DomainError("quadric is empty");
}

double g2_cofactor(const FocusedQuadric3& spheroid, const Quaternion& z) {
    if (spheroid.kind != FocusedQuadric3::Kind::spheroid || !spheroid.focal_form)
        throw DomainError("g2_cofactor needs a classified spheroid image");
    const auto& [a, b] = *spheroid.focal_form;
    const double d2 = spheroid.semi_minor * spheroid.semi_minor;
    return d2 * (a * norm_sq(z) - dot(b, hopf(z)) + 1.0);
}

FocusedQuadric3 rconfocal_spheroid(double b) {
    if (!(b > 0.0) || !std::isfinite(b) || b > 1e12) throw DomainError("r-confocal spheroid needs 0 < b < inf");
    FocusedQuadric3 f;
    f.kind = FocusedQuadric3::Kind::spheroid;
    f.axis = {1.0, 0.0, 0.0};
    f.semi_axis = std::sqrt(1.0 + b * b);
    f.semi_minor = b;
    return f;
}

FocusedQuadric3 rconfocal_hyperboloid(double a, int sheet) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("r-confocal hyperboloid needs 0 < a < 1");
    if (sheet != 1 && sheet != -1) throw DomainError("hyperboloid sheet must be +1 or -1");
    FocusedQuadric3 f;
    f.kind = FocusedQuadric3::Kind::hyperboloid_sheet;
    f.axis = {1.0, 0.0, 0.0};
    f.semi_axis = a;
    f.semi_minor = std::sqrt(1.0 - a * a);
    f.sheet = sheet;
    return f;
}

FocusedQuadric3 rconfocal_from_sphere(double r0) {
    if (!(r0 > 0.0) || std::abs(r0 - 1.0) < 1e-12) throw DomainError("sphere radius must be positive and != 1");
    return rconfocal_spheroid(0.5 * std::abs(r0 - 1.0 / r0));
}

FocusedQuadric3 rconfocal_from_cone(double psi0) {
    const double c = std::cos(psi0);
    if (!(psi0 > 0.0 && psi0 < 3.14159265358979323846)) throw DomainError("cone angle must lie in (0, pi)");
    if (std::abs(c) < 1e-14) {
        FocusedQuadric3 f;
        f.kind = FocusedQuadric3::Kind::plane;
        f.axis = {1.0, 0.0, 0.0};
        return f;
    }
    return rconfocal_hyperboloid(std::abs(c), c > 0.0 ? 1 : -1);
}

ImplicitSurface3 surface_of(const FocusedQuadric3& q) {
    return {[q](const PureQuaternion& x) { return q.wall(x); },
            [q](const PureQuaternion& x) { return q.wall_grad(x); }};
}

namespace {

std::optional<PureQuaternion> project(const ImplicitSurface3& s, PureQuaternion x) {
    for (int it = 0; it < 60; ++it) {
        const double g = s.g(x);
        const PureQuaternion gr = s.grad(x);
        const double n2 = norm_sq(gr);
        if (!(n2 > 0.0) || !std::isfinite(g)) return std::nullopt;
        const PureQuaternion dx = (g / n2) * gr;
        x = x - dx;
        if (norm(dx) <= 1e-15 * std::max(1.0, norm(x))) return x;
    }
    if (std::abs(s.g(x)) <= 1e-12) return x;
    return std::nullopt;
}

std::optional<PureQuaternion> ray_hit(const ImplicitSurface3& s, const PureQuaternion& o, const PureQuaternion& d,
                                      double radius) {
    const int n = 400;
    double t0 = 0.0, g0 = s.g(o);
    for (int k = 1; k <= n; ++k) {
        const double t1 = radius * k / n;
        const double g1 = s.g(o + t1 * d);
        if (std::isfinite(g0) && std::isfinite(g1) && g0 * g1 <= 0.0) {
            double lo = t0, hi = t1, glo = g0;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = s.g(o + mid * d);
                if (glo * gm <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            return project(s, o + (0.5 * (lo + hi)) * d);
        }
        t0 = t1;
        g0 = g1;
    }
    return std::nullopt;
}

}  // namespace

PureQuaternion nearest_point(const ImplicitSurface3& s, const PureQuaternion& origin, const NearestPointOptions& opts) {
    Rng rng(opts.seed, "nearest_point");
    double best_d = std::numeric_limits<double>::infinity();
    PureQuaternion best;
    double best_t = std::numeric_limits<double>::infinity();
    int found = 0;

    for (int start = 0; start < opts.starts; ++start) {
        PureQuaternion dir{rng.normal(), rng.normal(), rng.normal()};
        dir = dir / norm(dir);
        auto hit = ray_hit(s, origin, dir, opts.search_radius);
        // narrow surfaces can be missed by every ray; fall back to projecting a random point
        if (!hit) hit = project(s, origin + (opts.search_radius * rng.uniform()) * dir);
        if (!hit) continue;
        PureQuaternion x = *hit;
        double eta = 0.5;
        double tnorm = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts.max_iter; ++it) {
            const PureQuaternion gr = s.grad(x);
            const PureQuaternion nrm = gr / norm(gr);
            const PureQuaternion v = x - origin;
            const PureQuaternion t = v - dot(v, nrm) * nrm;
            tnorm = norm(t);
            if (tnorm <= opts.grad_tol) break;
            bool moved = false;
            while (eta > 1e-16) {
                auto y = project(s, x - eta * t);
                bool accept = false;
                if (y) {
                    const double dn = norm(*y - origin), dv = norm(v);
                    if (dn < dv - 1e-14 * dv) {
                        accept = true;
                    } else if (dn <= dv + 1e-14 * dv) {
                        const PureQuaternion g2 = s.grad(*y);
                        const PureQuaternion n2 = g2 / norm(g2);
                        const PureQuaternion v2 = *y - origin;
                        accept = norm(v2 - dot(v2, n2) * n2) < tnorm;
                    }
                }
                if (accept) {
                    x = *y;
                    eta = std::min(1.0, eta * 1.5);
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!moved) break;
        }
        ++found;
        const double d = norm(x - origin);
        if (d < best_d) {
            best_d = d;
            best = x;
            best_t = tnorm;
        }
    }
    if (found == 0 || best_t > opts.grad_tol * std::max(1.0, best_d)) {
        throw NumericalError("nearest_point did not converge",
                             "starts_on_surface=" + std::to_string(found) + " tangential_norm=" + std::to_string(best_t));
    }
    return best;
}

}  // namespace regulus
