#pragma once

#include <functional>
#include <string>
#include <vector>

#include "regulus/integrator.hpp"
#include "regulus/transforms.hpp"

namespace regulus {

enum class SystemKind {
    hooke4,
    kepler3,
    kepler3_reparam,
    twocenter3,
    twocenter_transformed,
    ktilde_spherical,
    lagrange3,
};

std::string system_name(SystemKind k);
SystemKind parse_system(const std::string& name);

/// Parameter conventions:
///  hooke4                 |w|^2/8 + f|z|^2 + m
///  kepler3                |P|^2/2 + m/|Q| + f          (attractive for m < 0)
///  kepler3_reparam        |P|^2|Q|/2 + m + f|Q|
///  twocenter3             |y|^2/2 + m1/|x-i| + m2/|x+i| - f
///  lagrange3              twocenter3 + m0|x|^2
///  twocenter_transformed  |w|^2/8 + (m1|z+i|^2 + m2|z-i|^2)/d^3 - f|z-i|^2|z+i|^2/d^4,  d = |z̄ - z|
///  ktilde_spherical       transformed two-center (or Lagrange when m0 != 0) in (r, psi, kappa), P_theta = 0
struct SystemSpec {
    SystemKind kind = SystemKind::hooke4;
    double f = 0.0;
    double m = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double m0 = 0.0;
    double C = 0.0;
    double exclusion = kDefaultExclusion;
};

/// Number of position coordinates; the state is (positions, momenta[, extra]).
int config_dim(SystemKind k);
/// Total state length. ktilde_spherical carries the physical time as a seventh component.
int state_dim(SystemKind k);

/// Throws SingularError for states in an excluded set.
void check_regular(const SystemSpec& spec, const Vec& y);

double eval_h(const SystemSpec& spec, const Vec& y);
/// Gradient with respect to the canonical coordinates (the clock component gets 0).
Vec eval_grad(const SystemSpec& spec, const Vec& y);
/// Hamilton's equations (plus the clock rate for ktilde_spherical).
Vec vector_field(const SystemSpec& spec, const Vec& y);
/// Inverse metric of the kinetic term, used to reflect momenta at walls.
Eigen::MatrixXd kinetic_inverse_metric(const SystemSpec& spec, const Vec& y);

double ktilde1(const SystemSpec& spec, double r, double P_r, double P_kappa);
double ktilde2(const SystemSpec& spec, double psi, double P_psi, double P_kappa);
/// dt/dtau = |x - i||x + i| along the ktilde flow.
double ktilde_clock_rate(double r, double psi);

/// Energy of the physical two-center (or Lagrange) problem, H - f.
double twocenter_energy(const SystemSpec& spec, const PureQuaternion& x, const PureQuaternion& y);

struct ConservedQuantity {
    std::string name;
    std::function<double(const Vec&)> eval;
};

std::vector<ConservedQuantity> conserved_set(const SystemSpec& spec);

struct TrajectoryOptions {
    IntegratorOptions integrator;
    std::vector<double> output_times;
    std::vector<EventSpec> events;
    /// Relative bound on |H - H(start)|; exceeding it raises NumericalError.
    double energy_drift_bound = std::numeric_limits<double>::infinity();
};

Trajectory integrate(const SystemSpec& spec, const Vec& y0, double t0, double t1, const TrajectoryOptions& opts = {});

/// Flow of |P|^2|Q|/2 + m + f|Q| started on its zero level.
Trajectory kepler_reparam_flow(const Vec& y0, double m, double f, double t0, double t1,
                               const TrajectoryOptions& opts = {});

Vec pack(const PhasePointH& p);
Vec pack(const PhasePointIH& p);
Vec pack(const SphericalState& s, double clock = 0.0);
PhasePointH unpack_h(const Vec& y);
PhasePointIH unpack_ih(const Vec& y);
/// theta = 0 and P_theta = 0.
SphericalState unpack_spherical(const Vec& y);

}  // namespace regulus
