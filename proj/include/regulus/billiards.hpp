#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "regulus/geometry.hpp"
#include "regulus/systems.hpp"

namespace regulus {

/// Wall in the configuration coordinates of a system (the first config_dim entries of a state).
struct WallSurface {
    std::string label;
    std::function<double(const Vec&)> g;
    std::function<Vec(const Vec&)> grad;
    std::optional<CenteredQuadric4> quadric4;
    std::optional<FocusedQuadric3> focused;
};

WallSurface wall_quadric4(const CenteredQuadric4& q);
WallSurface wall_focused(const FocusedQuadric3& q);
/// Level set of one chart coordinate, e.g. {r = r0} or {psi = psi0} for ktilde_spherical.
WallSurface wall_coordinate(int index, double value, const std::string& label);
/// |q| = R in any dimension.
WallSurface wall_round_sphere(double R);
/// Cone of half-angle psi0 around the i-axis in R^3.
WallSurface wall_axial_cone(double psi0);

/// Shorthand such as "sphere:r=2", "cone:psi=1.0", "spheroid:b=0.8", "hyperboloid:a=0.5,sheet=1",
/// "quadric4:A=1.4142,B=1,sA=1,sB=1". Sphere and cone are chart coordinates for ktilde_spherical.
WallSurface parse_wall(const std::string& shorthand, SystemKind kind);

/// v' = v - 2 <v,n>/<n,n> n
Vec reflect_velocity(const Vec& v, const Vec& n);
/// Reflection of a momentum in the metric given by the kinetic inverse metric M.
Vec reflect_momentum(const Vec& p, const Vec& n, const Eigen::MatrixXd& M);

struct BilliardSpec {
    SystemSpec system;
    std::vector<WallSurface> walls;
    int max_reflections = 100;
    double max_time = std::numeric_limits<double>::infinity();
    IntegratorOptions integrator;
    std::vector<double> output_times;  ///< when non-empty, samples are taken only here and at events
    double event_tol = 1e-10;
    double grazing_tol = 1e-10;
    double corner_tol = 1e-8;
};

struct ReflectionEvent {
    double t = 0.0;
    int wall = -1;
    Vec before;
    Vec after;
    Vec v_in;
    Vec v_out;
    Vec normal;
    double g = 0.0;
};

enum class Termination { completed, grazing, corner, singular };
std::string termination_name(Termination t);

struct ArcRecord {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> start;
    std::vector<double> end;
};

struct BilliardOrbit {
    SystemKind kind = SystemKind::hooke4;
    std::vector<std::vector<Sample>> arcs;
    std::vector<ReflectionEvent> events;
    std::vector<std::string> conserved_names;
    std::vector<ArcRecord> arc_table;
    Termination termination = Termination::completed;
    std::string message;
    IntegratorStats stats;

    std::vector<Sample> samples() const;
    /// Max over the orbit of |q(t) - q(t0)| / (1 + |q(t0)|) for conserved quantity k.
    double max_relative_drift(std::size_t k) const;
};

BilliardOrbit run_billiard(const BilliardSpec& spec, const Vec& state0);

/// Throws GrazingError/CornerError/SingularError if the orbit was truncated.
void require_complete(const BilliardOrbit& orbit);

/// hooke4 orbit on Σ¹ -> kepler3_reparam orbit.
BilliardOrbit push_orbit_ks(const BilliardOrbit& orbit, double tol = 1e-8);

/// ktilde_spherical orbit -> twocenter3 orbit in physical time (the clock component).
BilliardOrbit push_orbit_bw(const BilliardOrbit& orbit, const SystemSpec& target, double exclusion = kDefaultExclusion);

}  // namespace regulus
