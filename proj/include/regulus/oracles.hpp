#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regulus/quat.hpp"

namespace regulus {

/// Least-squares quadric through points. The coefficients, of (x², y², z², xy, xz, yz, x, y, z, 1)
/// with unit norm, are in the normalized coordinates u = (x - shift) / scale.
struct QuadricFit {
    Eigen::Matrix<double, 10, 1> coeffs;
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    double scale = 1.0;
    double residual = 0.0;  ///< max |row·c| / |row| over the points
    double conditioning = 0.0;  ///< second-smallest over largest singular value
};

QuadricFit fit_quadric(const std::vector<PureQuaternion>& pts);

/// Geometric data read off a fitted quadric of revolution.
struct FittedSurface {
    std::string kind;  ///< "plane", "sphere", "spheroid", "oblate_spheroid", "hyperboloid2", "hyperboloid1", "paraboloid", "other"
    PureQuaternion center;
    PureQuaternion axis;
    double semi_axis = 0.0;
    double semi_minor = 0.0;
    std::vector<PureQuaternion> foci;
};

/// Kind "degenerate" when the points do not determine a unique quadric (e.g. they lie on a plane).
FittedSurface analyze_fit(const QuadricFit& fit);

/// Least-squares plane n·x = offset with |n| = 1.
struct PlaneFit {
    PureQuaternion normal;
    double offset = 0.0;
    double residual = 0.0;  ///< max |n·x - offset|
};

PlaneFit fit_plane(const std::vector<PureQuaternion>& pts);

/// Symmetric Hausdorff distance between two polylines, measured to segments.
double hausdorff_polyline(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b);

/// Distance from p to the polyline.
double distance_to_polyline(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& line);

}  // namespace regulus
