#include "regulus/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regulus/errors.hpp"

namespace regulus {

namespace {

Eigen::Matrix<double, 1, 10> monomials(const PureQuaternion& p) {
    const double x = p.q1, y = p.q2, z = p.q3;
    Eigen::Matrix<double, 1, 10> row;
    row << x * x, y * y, z * z, x * y, x * z, y * z, x, y, z, 1.0;
    return row;
}

PureQuaternion pq(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

}  // namespace

QuadricFit fit_quadric(const std::vector<PureQuaternion>& pts) {
    if (pts.size() < 10) throw DomainError("quadric fit needs at least 10 points");
    // centre and scale so the monomial columns are comparable
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : pts) mean += Eigen::Vector3d(p.q1, p.q2, p.q3);
    mean /= static_cast<double>(pts.size());
    double s = 0.0;
    for (const auto& p : pts) s = std::max(s, (Eigen::Vector3d(p.q1, p.q2, p.q3) - mean).norm());
    if (s == 0.0) s = 1.0;
    auto local = [&](const PureQuaternion& p) {
        const Eigen::Vector3d u = (Eigen::Vector3d(p.q1, p.q2, p.q3) - mean) / s;
        return PureQuaternion{u(0), u(1), u(2)};
    };
    Eigen::MatrixXd M(pts.size(), 10);
    for (std::size_t k = 0; k < pts.size(); ++k) M.row(k) = monomials(local(pts[k]));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    const auto sv = svd.singularValues();

    QuadricFit fit;
    fit.coeffs = svd.matrixV().col(9);
    fit.shift = mean;
    fit.scale = s;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto row = monomials(local(pts[k]));
        fit.residual = std::max(fit.residual, std::abs(row.dot(fit.coeffs)) / row.norm());
    }
    fit.conditioning = sv(8) / sv(0);
    return fit;
}

static FittedSurface analyze_local(const QuadricFit& fit) {
    const auto& c = fit.coeffs;
    Eigen::Matrix3d Q;
    Q << c(0), c(3) / 2, c(4) / 2,
         c(3) / 2, c(1), c(5) / 2,
         c(4) / 2, c(5) / 2, c(2);
    const Eigen::Vector3d b(c(6) / 2, c(7) / 2, c(8) / 2);
    const double c0 = c(9);

    FittedSurface out;
    if (fit.conditioning < 1e-10) {
        out.kind = "degenerate";
        return out;
    }
    const double qscale = Q.cwiseAbs().maxCoeff();
    if (qscale <= 1e-9 * c.cwiseAbs().maxCoeff()) {
        out.kind = "plane";
        const double nb = b.norm();
        out.axis = pq(b / nb);
        out.center = pq(-c0 / (2.0 * nb) * b / nb);
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Q);
    Eigen::Vector3d ev = es.eigenvalues();
    const Eigen::Matrix3d R = es.eigenvectors();

    // the axis eigenvalue is the one not paired with another
    int ax = 0;
    {
        const double d01 = std::abs(ev(0) - ev(1)), d12 = std::abs(ev(1) - ev(2)), d02 = std::abs(ev(0) - ev(2));
        if (d12 <= d01 && d12 <= d02) ax = 0;
        else if (d02 <= d01 && d02 <= d12) ax = 1;
        else ax = 2;
    }
    const int m1 = (ax + 1) % 3;
    const double lam_a = ev(ax), lam_m = 0.5 * (ev(m1) + ev((ax + 2) % 3));
    const Eigen::Vector3d axis = R.col(ax);
    out.axis = pq(axis);

    const Eigen::Vector3d bp = R.transpose() * b;
    if (std::abs(lam_a) <= 1e-9 * qscale) {
        out.kind = "paraboloid";
        // lam_m (u2² + u3²) + 2 bp1 u1 + 2 bp2 u2 + 2 bp3 u3 + c0 = 0
        Eigen::Vector3d uc = Eigen::Vector3d::Zero();
        double cc = c0;
        for (int k = 0; k < 3; ++k) {
            if (k == ax) continue;
            uc(k) = -bp(k) / lam_m;
            cc -= lam_m * uc(k) * uc(k);
        }
        uc(ax) = -cc / (2.0 * bp(ax));
        const double p = -bp(ax) / (2.0 * lam_m);  // rho² = 4 p (u1 - u1v)
        Eigen::Vector3d f = uc;
        f(ax) += p;
        out.center = pq(R * uc);
        out.semi_axis = std::abs(p);
        out.foci = {pq(R * f)};
        return out;
    }

    const Eigen::Vector3d center = -Q.ldlt().solve(b);
    const double k = b.dot(center) * -1.0 - c0;  // (x-c)ᵀQ(x-c) = k
    out.center = pq(center);
    const double la = lam_a / k, lm = lam_m / k;
    if (la > 0 && lm > 0) {
        out.semi_axis = 1.0 / std::sqrt(la);
        out.semi_minor = 1.0 / std::sqrt(lm);
        if (std::abs(la - lm) <= 1e-9 * std::max(la, lm)) {
            out.kind = "sphere";
            out.foci = {pq(center)};
        } else if (la < lm) {
            out.kind = "spheroid";
            const double e = std::sqrt(out.semi_axis * out.semi_axis - out.semi_minor * out.semi_minor);
            out.foci = {pq(center + e * axis), pq(center - e * axis)};
        } else {
            out.kind = "oblate_spheroid";
        }
    } else if (la > 0 && lm < 0) {
        out.kind = "hyperboloid2";
        out.semi_axis = 1.0 / std::sqrt(la);
        out.semi_minor = 1.0 / std::sqrt(-lm);
        const double e = std::sqrt(out.semi_axis * out.semi_axis + out.semi_minor * out.semi_minor);
        out.foci = {pq(center + e * axis), pq(center - e * axis)};
    } else if (la < 0 && lm > 0) {
        out.kind = "hyperboloid1";
    } else {
        out.kind = "other";
    }
    return out;
}

FittedSurface analyze_fit(const QuadricFit& fit) {
    FittedSurface out = analyze_local(fit);
    auto back = [&](const PureQuaternion& u) { return pq(fit.shift + fit.scale * Eigen::Vector3d(u.q1, u.q2, u.q3)); };
    out.center = back(out.center);
    for (auto& f : out.foci) f = back(f);
    out.semi_axis *= fit.scale;
    out.semi_minor *= fit.scale;
    return out;
}

PlaneFit fit_plane(const std::vector<PureQuaternion>& pts) {
    if (pts.size() < 3) throw DomainError("plane fit needs at least 3 points");
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : pts) mean += Eigen::Vector3d(p.q1, p.q2, p.q3);
    mean /= static_cast<double>(pts.size());
    Eigen::MatrixXd M(pts.size(), 3);
    for (std::size_t k = 0; k < pts.size(); ++k) M.row(k) = Eigen::Vector3d(pts[k].q1, pts[k].q2, pts[k].q3) - mean;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    const Eigen::Vector3d n = svd.matrixV().col(2);
    PlaneFit out;
    out.normal = pq(n);
    out.offset = n.dot(mean);
    for (const auto& p : pts) out.residual = std::max(out.residual, std::abs(dot(out.normal, p) - out.offset));
    return out;
}

double distance_to_polyline(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& line) {
    if (line.empty()) return std::numeric_limits<double>::infinity();
    if (line.size() == 1) return (p - line[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
        const Eigen::Vector3d a = line[k], d = line[k + 1] - line[k];
        const double dd = d.squaredNorm();
        const double t = dd > 0.0 ? std::clamp((p - a).dot(d) / dd, 0.0, 1.0) : 0.0;
        best = std::min(best, (p - a - t * d).norm());
    }
    return best;
}

double hausdorff_polyline(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
    double h = 0.0;
    for (const auto& p : a) h = std::max(h, distance_to_polyline(p, b));
    for (const auto& p : b) h = std::max(h, distance_to_polyline(p, a));
    return h;
}

}  // namespace regulus
