#include "regulus/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "regulus/errors.hpp"

namespace regulus {

namespace {

constexpr double kPi = std::numbers::pi;

Quaternion unit_or_throw(const Quaternion& q, const char* what) {
    const double n = norm(q);
    if (n == 0.0) throw DomainError(what);
    return q / n;
}

}  // namespace

double wrap_angle(double a) {
    double r = std::fmod(a, 2.0 * kPi);
    if (r < 0.0) r += 2.0 * kPi;
    if (r >= 2.0 * kPi) r = 0.0;
    return r;
}

LeviCivitaResult levi_civita(Complex z, Complex w) {
    const double n2 = std::norm(z);
    if (n2 == 0.0) throw DomainError("Levi-Civita singular at origin");
    return {z * z, z * w / (2.0 * n2)};
}

bool on_sigma1(const PhasePointH& pt, double tol) {
    if (norm_sq(pt.z) == 0.0) return false;
    return std::abs(bl(pt.z, pt.w)) <= tol * (1.0 + norm(pt.z) * norm(pt.w));
}

Quaternion ks_momentum(const Quaternion& z, const Quaternion& w) {
    const double n2 = norm_sq(z);
    if (n2 == 0.0) throw DomainError("K.S. map singular at z = 0");
    return mul(mul(conj(z), kI), w) / (2.0 * n2);
}

PhasePointIH ks_forward(const PhasePointH& pt, KsMode mode, double tol) {
    if (norm_sq(pt.z) == 0.0) throw DomainError("K.S. map singular at z = 0");
    if (mode == KsMode::restricted && !on_sigma1(pt, tol)) throw ConstraintError("point not on Σ¹");
    return {hopf(pt.z), imag(ks_momentum(pt.z, pt.w))};
}

std::pair<Quaternion, Quaternion> ks_differential(const PhasePointH& pt, const Quaternion& dz, const Quaternion& dw) {
    const Quaternion& z = pt.z;
    const Quaternion& w = pt.w;
    const double n2 = norm_sq(z);
    if (n2 == 0.0) throw DomainError("K.S. map singular at z = 0");
    const Quaternion dQ = mul(mul(conj(dz), kI), z) + mul(mul(conj(z), kI), dz);
    const Quaternion num = mul(mul(conj(dz), kI), w) + mul(mul(conj(z), kI), dw);
    const Quaternion ziw = mul(mul(conj(z), kI), w);
    const Quaternion dP = num / (2.0 * n2) - ziw * (dot(z, dz) / (n2 * n2));
    return {dQ, dP};
}

Quaternion hopf_lift(const PureQuaternion& Q, double theta, LiftChart chart, double exclusion) {
    const double nq = norm(Q);
    if (nq == 0.0) throw DomainError("cannot lift Q = 0");
    const PureQuaternion u = Q / nq;
    if (chart == LiftChart::automatic) chart = u.q1 >= 0.0 ? LiftChart::principal : LiftChart::alternate;

    Quaternion x;
    if (chart == LiftChart::principal) {
        if (1.0 + u.q1 < exclusion) throw ChartError("use alternate lift chart");
        // (1 - i u) is a Hopf preimage direction of u, normalized so that Q = i lifts to 1.
        x = unit_or_throw({1.0 + u.q1, 0.0, u.q3, -u.q2}, "degenerate lift");
    } else {
        // hopf(x j) = -j hopf(x) j, so lift the rotated direction and multiply by j.
        const Quaternion r = -mul(mul(kJ, u.quat()), kJ);
        if (1.0 + r.z1 < exclusion) throw ChartError("use principal lift chart");
        const Quaternion y = unit_or_throw({1.0 + r.z1, 0.0, r.z3, -r.z2}, "degenerate lift");
        x = mul(y, kJ);
    }
    return std::sqrt(nq) * mul(exp_i(theta), x);
}

PhasePointH ks_lift(const PhasePointIH& pt, double theta, LiftChart chart, double exclusion) {
    const Quaternion z = hopf_lift(pt.Q, theta, chart, exclusion);
    const Quaternion w = -2.0 * mul(mul(kI, z), pt.P.quat());
    return {z, w};
}

bool lc_plane_check(const Quaternion& v1, const Quaternion& v2, double tol) {
    if (std::abs(norm(v1) - 1.0) > tol || std::abs(norm(v2) - 1.0) > tol) return false;
    if (norm(v1 - v2) <= tol || norm(v1 + v2) <= tol) return false;
    return std::abs(bl(v1, v2)) <= tol;
}

std::pair<Quaternion, Quaternion> lc_plane_lift(const PureQuaternion& w1, const PureQuaternion& w2) {
    const double n1 = norm(w1), n2 = norm(w2);
    if (n1 == 0.0 || n2 == 0.0) throw DomainError("degenerate plane: zero vector");
    if (norm(cross(w1, w2)) <= 1e-12 * n1 * n2) throw DomainError("degenerate plane: parallel vectors");
    const Quaternion v1 = hopf_lift(w1 / n1, 0.0);
    const Quaternion x = hopf_lift(w2 / n2, 0.0);
    // bl(v1, e^{it} x) = cos t bl(v1,x) - sin t Re(v̄1 x)
    const double b = bl(v1, x);
    const double c = dot(v1, x);
    const double t = std::atan2(b, c);
    return {v1, mul(exp_i(t), x)};
}

ExtQuaternion phi1(const ExtQuaternion& z) {
    if (z.infinite) return {kI};
    const Quaternion d = z.value - kI;
    if (norm_sq(d) == 0.0) return ExtQuaternion::infinity();
    return {kI - 2.0 * inverse(d)};
}

ExtQuaternion phi1_inv(const ExtQuaternion& a) {
    if (a.infinite) return {kI};
    const Quaternion d = kI - a.value;
    if (norm_sq(d) == 0.0) return ExtQuaternion::infinity();
    return {kI + 2.0 * inverse(d)};
}

ExtPure phi2(const ExtPure& q) {
    const ExtQuaternion r = phi1(ExtQuaternion{q.value.quat(), q.infinite});
    return {imag(r.value), r.infinite};
}

ExtPure phi2_inv(const ExtPure& x) {
    const ExtQuaternion r = phi1_inv(ExtQuaternion{x.value.quat(), x.infinite});
    return {imag(r.value), r.infinite};
}

ExtPure bw_base(const Quaternion& z, double exclusion) {
    const double z0 = z.z0, z1 = z.z1, z2 = z.z2, z3 = z.z3;
    const double rho = z1 * z1 + z2 * z2 + z3 * z3;
    if (rho == 0.0) return ExtPure::infinity();
    if (std::sqrt(rho) < exclusion) throw SingularError("bw_base: z within exclusion radius of the real line");
    const double s = z0 * z0;
    return {{0.5 * (z1 + z1 * (s + 1.0) / rho), 0.5 * (z2 + (z2 * (s - 1.0) + 2.0 * z0 * z3) / rho),
             0.5 * (z3 + (z3 * (s - 1.0) - 2.0 * z0 * z2) / rho)}};
}

ExtPure bw_base_chain(const Quaternion& z) {
    const ExtQuaternion a = phi1(z);
    if (a.infinite) return phi2(ExtPure::infinity());
    return phi2(ExtPure{hopf(a.value)});
}

double lambda_hat_constraint(const Quaternion& z, const Quaternion& w) {
    const Quaternion zb = conj(z);
    return mul(mul(zb + kI, w), zb - kI).z0;
}

double lambda_hat_constraint_alt(const Quaternion& z, const Quaternion& w) {
    const Quaternion zb = conj(z);
    return mul(mul(zb - kI, w), zb + kI).z0;
}

bool on_lambda_hat(const LambdaHatPoint& pt, double tol, double exclusion) {
    const double im = norm(imag(pt.z));
    if (im < exclusion || norm(pt.z - kI) < exclusion || norm(pt.z + kI) < exclusion) return false;
    return std::abs(lambda_hat_constraint(pt.z, pt.w)) <= tol * (1.0 + norm_sq(pt.z) * norm(pt.w));
}

PhasePointH phi1_phase(const Quaternion& z, const Quaternion& w) {
    const ExtQuaternion a = phi1(z);
    if (a.infinite) throw SingularError("Phi1 undefined at z = i");
    const Quaternion c = conj(z - kI);
    return {a.value, mul(mul(c, w), c) / 2.0};
}

PhasePointH phi1_phase_inv(const Quaternion& alpha, const Quaternion& beta) {
    const ExtQuaternion z = phi1_inv(alpha);
    if (z.infinite) throw SingularError("Phi1 inverse undefined at alpha = i");
    const Quaternion ci = inverse(conj(z.value - kI));
    return {z.value, 2.0 * mul(mul(ci, beta), ci)};
}

namespace {

BwImage phi2_phase(const PureQuaternion& q, const PureQuaternion& p) {
    const ExtPure x = phi2(q);
    if (x.infinite) throw SingularError("Phi2 undefined at q = i");
    const Quaternion c = conj(q.quat() - kI);
    return {x.value, imag(mul(mul(c, p.quat()), c) / 2.0)};
}

}  // namespace

BwImage bw_phase(const LambdaHatPoint& pt, double tol, double exclusion) {
    const Quaternion& z = pt.z;
    if (norm(imag(z)) < exclusion) throw SingularError("bw_phase: z near the real line");
    if (norm(z - kI) < exclusion || norm(z + kI) < exclusion) throw SingularError("bw_phase: z near ±i");
    if (std::abs(lambda_hat_constraint(z, pt.w)) > tol * (1.0 + norm_sq(z) * norm(pt.w)))
        throw ConstraintError("point violates the Λ̂ momentum constraint");
    const PhasePointH ab = phi1_phase(z, pt.w);
    const PhasePointIH qp = ks_forward(ab, KsMode::unrestricted);
    return phi2_phase(qp.Q, qp.P);
}

LambdaHatPoint bw_lift(const PureQuaternion& x, const PureQuaternion& y, double theta, double exclusion) {
    if (norm(x - PureQuaternion{1.0, 0.0, 0.0}) < exclusion || norm(x + PureQuaternion{1.0, 0.0, 0.0}) < exclusion)
        throw DomainError("collision point");
    const PureQuaternion q = phi2_inv(x).value;
    const Quaternion ci = inverse(conj(q.quat() - kI));
    const PureQuaternion p = imag(2.0 * mul(mul(ci, y.quat()), ci));
    const PhasePointH ab = ks_lift({q, p}, theta, LiftChart::automatic, exclusion);
    const PhasePointH zw = phi1_phase_inv(ab.z, ab.w);
    return {zw.z, zw.w};
}

std::pair<double, double> BirkhoffSurface::residuals(const Quaternion& z) const {
    const double s = std::sin(theta), c = std::cos(theta);
    const double plane = k2 * (z.z2 * c + z.z3 * s) + k3 * (z.z3 * c - z.z2 * s);
    if (kind == Kind::plane) return {z.z0, plane};
    const double im2 = z.z1 * z.z1 + z.z2 * z.z2 + z.z3 * z.z3;
    const double a = s * z.z0 - c;
    return {a * a + im2 * s * s - 1.0, plane};
}

bool BirkhoffSurface::contains(const Quaternion& z, double tol) const {
    const auto [e1, e2] = residuals(z);
    return std::abs(e1) <= tol && std::abs(e2) <= tol;
}

Quaternion BirkhoffSurface::point(double r, double psi) const {
    const double kappa = std::atan2(-k2, k3);
    return z_theta(r, psi, kappa, kind == Kind::plane ? 0.0 : theta);
}

BirkhoffSurface birkhoff_surface(double theta, double k2, double k3) {
    if (k2 == 0.0 && k3 == 0.0) throw DomainError("birkhoff_surface: (k2, k3) must be nonzero");
    BirkhoffSurface s;
    s.theta = wrap_angle(theta);
    s.k2 = k2;
    s.k3 = k3;
    const double sn = std::sin(s.theta);
    s.kind = std::abs(sn) <= 1e-12 ? BirkhoffSurface::Kind::plane : BirkhoffSurface::Kind::sphere;
    if (s.kind == BirkhoffSurface::Kind::plane) s.theta = std::cos(s.theta) > 0.0 ? 0.0 : kPi;
    return s;
}

Quaternion z_theta(double r, double psi, double kappa, double theta) {
    const double r2 = r * r;
    const double d = (r2 + 1.0) - (r2 - 1.0) * std::cos(theta);
    const double sp = std::sin(psi);
    return Quaternion{(r2 - 1.0) * std::sin(theta), 2.0 * r * std::cos(psi), 2.0 * r * sp * std::cos(theta + kappa),
                      2.0 * r * sp * std::sin(theta + kappa)} /
           d;
}

Eigen::Matrix4d z_theta_jacobian(double r, double psi, double kappa, double theta) {
    const double r2 = r * r;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(psi), sp = std::sin(psi);
    const double c = std::cos(theta + kappa), s = std::sin(theta + kappa);
    const double d = (r2 + 1.0) - (r2 - 1.0) * ct;
    const Eigen::Vector4d n((r2 - 1.0) * st, 2.0 * r * cp, 2.0 * r * sp * c, 2.0 * r * sp * s);
    const Eigen::Vector4d z = n / d;

    Eigen::Matrix4d dn;
    dn.col(0) << 2.0 * r * st, 2.0 * cp, 2.0 * sp * c, 2.0 * sp * s;
    dn.col(1) << 0.0, -2.0 * r * sp, 2.0 * r * cp * c, 2.0 * r * cp * s;
    dn.col(2) << 0.0, 0.0, -2.0 * r * sp * s, 2.0 * r * sp * c;
    dn.col(3) << (r2 - 1.0) * ct, 0.0, -2.0 * r * sp * s, 2.0 * r * sp * c;
    const Eigen::Vector4d dd(2.0 * r * (1.0 - ct), 0.0, 0.0, (r2 - 1.0) * st);

    Eigen::Matrix4d j;
    for (int k = 0; k < 4; ++k) j.col(k) = (dn.col(k) - z * dd(k)) / d;
    return j;
}

namespace {

void check_chart(double r, double psi, double exclusion) {
    if (!(r > 0.0)) throw ChartError("spherical chart requires r > 0");
    if (std::abs(r - 1.0) < exclusion) throw ChartError("spherical chart singular at r = 1");
    if (std::abs(std::sin(psi)) < exclusion) throw ChartError("spherical chart singular at psi in {0, pi}");
}

Eigen::Vector4d as_vec(const Quaternion& q) { return {q.z0, q.z1, q.z2, q.z3}; }

}  // namespace

SphericalState spherical_from_phase(const PhasePointH& pt, std::optional<double> theta_seed, double exclusion) {
    if (norm_sq(pt.z) == 0.0) throw DomainError("spherical chart undefined at z = 0");
    const ExtQuaternion a = phi1(pt.z);
    if (a.infinite) throw ChartError("spherical chart undefined at z = i");
    const Quaternion al = a.value;
    if (std::hypot(al.z0, al.z1) <= exclusion * norm(al)) throw ChartError("fiber angle undetermined (r = 1)");

    auto reduce = [&](double th) {
        const ExtQuaternion z0 = phi1_inv(mul(exp_i(-th), al));
        if (z0.infinite) throw ChartError("spherical chart undefined on this fiber");
        return z0.value;
    };

    const double ta = wrap_angle(std::atan2(-al.z0, al.z1));
    const double tb = wrap_angle(ta + kPi);
    double theta = ta;
    if (theta_seed) {
        auto dist = [&](double t) {
            const double d = std::abs(wrap_angle(t - *theta_seed));
            return std::min(d, 2.0 * kPi - d);
        };
        theta = dist(ta) <= dist(tb) ? ta : tb;
    } else {
        const double ra = norm(reduce(ta));
        theta = ra >= 1.0 ? ta : tb;
    }

    const Quaternion z0 = reduce(theta);
    SphericalState s;
    s.r = norm(imag(z0));
    s.psi = std::acos(std::clamp(z0.z1 / s.r, -1.0, 1.0));
    s.kappa = wrap_angle(std::atan2(z0.z3, z0.z2));
    s.theta = theta;
    check_chart(s.r, s.psi, exclusion);

    const Eigen::Vector4d p = z_theta_jacobian(s.r, s.psi, s.kappa, s.theta).transpose() * as_vec(pt.w);
    s.P_r = p(0);
    s.P_psi = p(1);
    s.P_kappa = p(2);
    s.P_theta = p(3);
    return s;
}

PhasePointH spherical_to_phase(const SphericalState& s, double exclusion) {
    check_chart(s.r, s.psi, exclusion);
    const Eigen::Matrix4d j = z_theta_jacobian(s.r, s.psi, s.kappa, s.theta);
    const Eigen::Vector4d w = j.transpose().partialPivLu().solve(Eigen::Vector4d(s.P_r, s.P_psi, s.P_kappa, s.P_theta));
    return {z_theta(s.r, s.psi, s.kappa, s.theta), {w(0), w(1), w(2), w(3)}};
}

}  // namespace regulus
