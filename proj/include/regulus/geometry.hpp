#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regulus/quat.hpp"

namespace regulus {

struct NormalFormEntry {
    int sigma = 0;          ///< +1, -1, or 0 for a zero eigenvalue
    double a = 0.0;         ///< 1/sqrt(|eigenvalue|); infinite when sigma == 0
    double eigenvalue = 0.0;
};

struct NormalForm {
    std::array<NormalFormEntry, 4> entries;
    Eigen::Matrix4d basis;  ///< orthonormal columns, one per entry

    Eigen::Matrix4d reconstruct() const;
};

struct CenteredQuadric4 {
    Eigen::Matrix4d A = Eigen::Matrix4d::Identity();

    double eval(const Quaternion& z) const;  ///< z^T A z - 1
    Quaternion grad(const Quaternion& z) const;
};

/// Eigen-decomposition sorted by descending |eigenvalue|; eigenvector sign fixed so that its
/// first nonzero component is positive.
NormalForm normal_form(const Eigen::Matrix4d& A);

/// Matrix of z -> i z acting on (z0, z1, z2, z3).
Eigen::Matrix4d left_mul_i();

/// Symmetric matrix H_k with z^T H_k z = hopf(z)_k, k = 0, 1, 2.
Eigen::Matrix4d hopf_component_matrix(int k);

bool is_s1_invariant(const Eigen::Matrix4d& A, double tol = 1e-10);

/// Every S^1-invariant form is a|z|^2 + b·hopf(z).
struct S1Decomposition {
    double a = 0.0;
    PureQuaternion b;
    double residual = 0.0;  ///< max-norm of the part outside that family
};

S1Decomposition s1_decompose(const Eigen::Matrix4d& A);
Eigen::Matrix4d s1_form(double a, const PureQuaternion& b);

/// Form with eigenvalue lam13 on span{u1,u3} and lam24 on span{u2,u4}, where
/// u1 = (z0+z2)/√2, u2 = (z0-z2)/√2, u3 = (z1+z3)/√2, u4 = (z1-z3)/√2.
Eigen::Matrix4d u_coordinate_form(double lam13, double lam24);

CenteredQuadric4 dual_quadric(const CenteredQuadric4& q);

struct FocusedQuadric3 {
    enum class Kind { plane, centered_sphere, spheroid, hyperboloid_sheet, paraboloid };

    Kind kind = Kind::centered_sphere;
    PureQuaternion center;   ///< sphere/spheroid/hyperboloid centre, paraboloid vertex, plane foot point
    PureQuaternion axis{1.0, 0.0, 0.0};  ///< symmetry axis; plane normal; paraboloid opening direction
    double semi_axis = 1.0;  ///< along the axis (C for spheroids); radius for spheres
    double semi_minor = 1.0; ///< across the axis (D for spheroids)
    double focal = 0.0;      ///< paraboloid vertex-to-focus distance
    int sheet = 0;           ///< hyperboloid: sign of axis·(x - center) on the sheet

    /// For Hopf images: the exact equation a|x| + b·x = 1.
    std::optional<std::pair<double, PureQuaternion>> focal_form;

    /// Normalized quadratic equation of the classified kind (zero on the surface).
    double implicit(const PureQuaternion& x) const;
    /// Smooth function whose zero set is exactly this surface (single sheet for hyperboloids).
    double wall(const PureQuaternion& x) const;
    PureQuaternion wall_grad(const PureQuaternion& x) const;
    std::vector<PureQuaternion> foci() const;
    bool on_branch(const PureQuaternion& x) const;
};

std::string kind_name(FocusedQuadric3::Kind k);

/// Requires an S^1-invariant, nonempty quadric.
FocusedQuadric3 hopf_image_classify(const CenteredQuadric4& q);

/// The second factor of the pulled-back spheroid equation; has no real zeros.
double g2_cofactor(const FocusedQuadric3& spheroid, const Quaternion& z);

/// Spheroid with foci ±i and semi-minor axis b.
FocusedQuadric3 rconfocal_spheroid(double b);
/// Sheet of the hyperboloid with foci ±i and vertex distance a; sheet = +1 on the x1 > 0 side.
FocusedQuadric3 rconfocal_hyperboloid(double a, int sheet);

/// Image of {r = r0} under the base map.
FocusedQuadric3 rconfocal_from_sphere(double r0);
/// Image of {psi = psi0}; psi0 = pi/2 gives the plane x1 = 0.
FocusedQuadric3 rconfocal_from_cone(double psi0);

struct ImplicitSurface3 {
    std::function<double(const PureQuaternion&)> g;
    std::function<PureQuaternion(const PureQuaternion&)> grad;
};

ImplicitSurface3 surface_of(const FocusedQuadric3& q);

struct NearestPointOptions {
    int starts = 32;
    double grad_tol = 1e-10;
    int max_iter = 20000;
    double search_radius = 10.0;
    std::uint64_t seed = 1;
};

/// Local minimizer of |x - origin| on {g = 0}, best of several starts.
PureQuaternion nearest_point(const ImplicitSurface3& s, const PureQuaternion& origin,
                             const NearestPointOptions& opts = {});

}  // namespace regulus
