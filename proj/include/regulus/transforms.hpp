#pragma once

#include <complex>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "regulus/quat.hpp"

namespace regulus {

using Complex = std::complex<double>;

/// Default radius around singular sets (z real, z = ±i, r = 1, psi in {0, pi}).
inline constexpr double kDefaultExclusion = 1e-8;

struct PhasePointH {
    Quaternion z;
    Quaternion w;
};

struct PhasePointIH {
    PureQuaternion Q;
    PureQuaternion P;
};

struct LeviCivitaResult {
    Complex q;
    Complex p;
};

LeviCivitaResult levi_civita(Complex z, Complex w);

bool on_sigma1(const PhasePointH& pt, double tol = 1e-10);

enum class KsMode { restricted, unrestricted };

/// z̄ i w / (2|z|^2) with its scalar part kept; the scalar part equals bl(z,w)/(2|z|^2).
Quaternion ks_momentum(const Quaternion& z, const Quaternion& w);

/// In unrestricted mode the scalar part of the momentum is discarded.
PhasePointIH ks_forward(const PhasePointH& pt, KsMode mode = KsMode::restricted, double tol = 1e-10);

/// Exact differential of (z,w) -> (z̄iz, z̄iw/(2|z|^2)) applied to (dz, dw).
std::pair<Quaternion, Quaternion> ks_differential(const PhasePointH& pt, const Quaternion& dz, const Quaternion& dw);

enum class LiftChart { principal, alternate, automatic };

/// Unit-norm-scaled section of the Hopf map: hopf(result) = Q.
Quaternion hopf_lift(const PureQuaternion& Q, double theta, LiftChart chart = LiftChart::automatic,
                     double exclusion = kDefaultExclusion);

PhasePointH ks_lift(const PhasePointIH& pt, double theta, LiftChart chart = LiftChart::automatic,
                    double exclusion = kDefaultExclusion);

bool lc_plane_check(const Quaternion& v1, const Quaternion& v2, double tol = 1e-10);

std::pair<Quaternion, Quaternion> lc_plane_lift(const PureQuaternion& w1, const PureQuaternion& w2);

template <class T>
struct Extended {
    T value{};
    bool infinite = false;

    static Extended infinity() { return {T{}, true}; }
};

using ExtQuaternion = Extended<Quaternion>;
using ExtPure = Extended<PureQuaternion>;

ExtQuaternion phi1(const ExtQuaternion& z);
ExtQuaternion phi1_inv(const ExtQuaternion& alpha);
ExtPure phi2(const ExtPure& q);
ExtPure phi2_inv(const ExtPure& x);

inline ExtQuaternion phi1(const Quaternion& z) { return phi1(ExtQuaternion{z}); }
inline ExtQuaternion phi1_inv(const Quaternion& a) { return phi1_inv(ExtQuaternion{a}); }
inline ExtPure phi2(const PureQuaternion& q) { return phi2(ExtPure{q}); }
inline ExtPure phi2_inv(const PureQuaternion& x) { return phi2_inv(ExtPure{x}); }

/// Closed-form position map. Real z goes to infinity.
ExtPure bw_base(const Quaternion& z, double exclusion = kDefaultExclusion);

/// The same map evaluated as phi2(hopf(phi1(z))).
ExtPure bw_base_chain(const Quaternion& z);

struct LambdaHatPoint {
    Quaternion z;
    Quaternion w;
};

struct BwImage {
    PureQuaternion x;
    PureQuaternion y;
};

/// Re((z̄+i) w (z̄-i)); vanishes exactly when the first Möbius step lands on bl = 0.
double lambda_hat_constraint(const Quaternion& z, const Quaternion& w);

/// Re((z̄-i) w (z̄+i)); kept for comparison only.
double lambda_hat_constraint_alt(const Quaternion& z, const Quaternion& w);

bool on_lambda_hat(const LambdaHatPoint& pt, double tol = 1e-10, double exclusion = kDefaultExclusion);

/// (z,w) -> (alpha, beta)
PhasePointH phi1_phase(const Quaternion& z, const Quaternion& w);
/// (alpha, beta) -> (z, w)
PhasePointH phi1_phase_inv(const Quaternion& alpha, const Quaternion& beta);

BwImage bw_phase(const LambdaHatPoint& pt, double tol = 1e-10, double exclusion = kDefaultExclusion);

LambdaHatPoint bw_lift(const PureQuaternion& x, const PureQuaternion& y, double theta,
                       double exclusion = kDefaultExclusion);

struct BirkhoffSurface {
    enum class Kind { sphere, plane } kind = Kind::sphere;
    double theta = 0.0;
    double k2 = 1.0;
    double k3 = 0.0;

    /// Residuals of the two defining equations.
    std::pair<double, double> residuals(const Quaternion& z) const;
    bool contains(const Quaternion& z, double tol = 1e-10) const;
    /// A point of the surface, parametrized by (r, psi).
    Quaternion point(double r, double psi) const;
};

BirkhoffSurface birkhoff_surface(double theta, double k2, double k3);

Quaternion z_theta(double r, double psi, double kappa, double theta);

/// Columns are the partial derivatives of z_theta in (r, psi, kappa, theta).
Eigen::Matrix4d z_theta_jacobian(double r, double psi, double kappa, double theta);

struct SphericalState {
    double r = 1.0;
    double psi = 0.5 * 3.14159265358979323846;
    double kappa = 0.0;
    double theta = 0.0;
    double P_r = 0.0;
    double P_psi = 0.0;
    double P_kappa = 0.0;
    double P_theta = 0.0;
};

/// Without a seed the branch with r >= 1 is chosen.
SphericalState spherical_from_phase(const PhasePointH& pt, std::optional<double> theta_seed = std::nullopt,
                                    double exclusion = kDefaultExclusion);

PhasePointH spherical_to_phase(const SphericalState& s, double exclusion = kDefaultExclusion);

double wrap_angle(double a);

}  // namespace regulus
