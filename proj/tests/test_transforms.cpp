#include <doctest.h>

#include "regulus/errors.hpp"
#include "regulus/transforms.hpp"
#include "test_util.hpp"

using namespace regulus;
using regulus::test::dist;

namespace {

PhasePointH rand_sigma1(Rng& rng) {
    const Quaternion z = test::rand_quat(rng);
    Quaternion w = test::rand_quat(rng);
    const Quaternion iz = kI * z;
    w = w - (dot(iz, w) / norm_sq(iz)) * iz;  // bl(z, w) = -<iz, w>
    return {z, w};
}

// Random point of Lambda-hat: project w onto the zero set of the linear constraint.
LambdaHatPoint rand_lambda(Rng& rng) {
    Quaternion z;
    do z = test::rand_quat(rng); while (norm(imag(z)) < 0.2 || norm(z - kI) < 0.2 || norm(z + kI) < 0.2);
    Quaternion w = test::rand_quat(rng);
    Quaternion g;
    for (int k = 0; k < 4; ++k) {
        Quaternion e;
        e[k] = 1.0;
        g[k] = lambda_hat_constraint(z, e);
    }
    w = w - (lambda_hat_constraint(z, w) / norm_sq(g)) * g;
    return {z, w};
}

}  // namespace

TEST_CASE("Levi-Civita examples") {
    auto lc = levi_civita({1, 0}, {2, 0});
    CHECK(std::abs(lc.q - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(lc.p - Complex(1, 0)) < 1e-15);
    lc = levi_civita({0, 1}, {0, 0});
    CHECK(std::abs(lc.q - Complex(-1, 0)) < 1e-15);
    lc = levi_civita({1, 1}, {2, 0});
    CHECK(std::abs(lc.q - Complex(0, 2)) < 1e-15);
    CHECK(std::abs(lc.p - Complex(0.5, 0.5)) < 1e-15);
    CHECK_THROWS_AS(levi_civita({0, 0}, {1, 0}), DomainError);
}

TEST_CASE("K.S. forward examples and errors") {
    auto p = ks_forward({kOne, 4.0 * kJ});
    CHECK(dist(p.Q, PureQuaternion{1, 0, 0}) < 1e-15);
    CHECK(dist(p.P, PureQuaternion{0, 0, 2}) < 1e-15);
    p = ks_forward({kOne, Quaternion{}});
    CHECK(dist(p.P, PureQuaternion{}) == 0.0);
    const Quaternion e = exp_i(0.7);
    p = ks_forward({e * kOne, e * (4.0 * kJ)});
    CHECK(dist(p.Q, PureQuaternion{1, 0, 0}) < 1e-14);
    CHECK(dist(p.P, PureQuaternion{0, 0, 2}) < 1e-14);
    CHECK_THROWS_AS(ks_forward({Quaternion{}, kJ}), DomainError);
    CHECK_THROWS_AS(ks_forward({kOne, kI}), ConstraintError);
    CHECK_NOTHROW(ks_forward({kOne, kI}, KsMode::unrestricted));
}

TEST_CASE("K.S. lift examples and round trip") {
    auto z = ks_lift({{1, 0, 0}, {}}, 0.0);
    CHECK(dist(z.z, kOne) < 1e-15);
    CHECK(dist(z.w, Quaternion{}) == 0.0);
    z = ks_lift({{2, 0, 0}, {}}, 0.0);
    CHECK(dist(z.z, std::sqrt(2.0) * kOne) < 1e-15);
    CHECK_THROWS_AS(ks_lift({{}, {1, 0, 0}}, 0.0), DomainError);
    CHECK_THROWS_AS(hopf_lift({-1, 0, 0}, 0.0, LiftChart::principal), ChartError);
    CHECK(dist(hopf(hopf_lift({-1, 0, 0}, 0.3)), PureQuaternion{-1, 0, 0}) < 1e-14);

    Rng rng(3, "transforms.ks_lift");
    for (int n = 0; n < 1000; ++n) {
        const PhasePointIH x{test::rand_pure(rng), test::rand_pure(rng)};
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const PhasePointH up = ks_lift(x, theta);
        CHECK(on_sigma1(up));
        const PhasePointIH back = ks_forward(up);
        CHECK(dist(back.Q, x.Q) <= 1e-12 * (1 + norm(x.Q)));
        CHECK(dist(back.P, x.P) <= 1e-12 * (1 + norm(x.P)));
    }
}

TEST_CASE("K.S. differential matches finite differences") {
    Rng rng(4, "transforms.ks_diff");
    for (int n = 0; n < 200; ++n) {
        const PhasePointH pt = rand_sigma1(rng);
        const Quaternion dz = test::rand_quat(rng, 1.0), dw = test::rand_quat(rng, 1.0);
        const auto [dQ, dP] = ks_differential(pt, dz, dw);
        const double h = 1e-6;
        auto q = [&](double s) { return conj(pt.z + s * dz) * kI * (pt.z + s * dz); };
        auto p = [&](double s) { return ks_momentum(pt.z + s * dz, pt.w + s * dw); };
        const Quaternion fdQ = (q(h) - q(-h)) / (2 * h), fdP = (p(h) - p(-h)) / (2 * h);
        CHECK(dist(dQ, fdQ) <= 1e-6 * (1 + norm(fdQ)));
        CHECK(dist(dP, fdP) <= 1e-6 * (1 + norm(fdP)));
    }
}

TEST_CASE("Levi-Civita planes") {
    CHECK(lc_plane_check(kOne, kJ));
    CHECK_FALSE(lc_plane_check(kOne, kI));
    CHECK_FALSE(lc_plane_check(kOne, kOne));
    for (const PureQuaternion w2 : {PureQuaternion{0, 1, 0}, PureQuaternion{0, 0, 1}}) {
        const auto [v1, v2] = lc_plane_lift({1, 0, 0}, w2);
        CHECK(lc_plane_check(v1, v2));
        CHECK(std::abs(bl(v1, v2)) <= 1e-12);
        CHECK(dist(hopf(v1) / norm(hopf(v1)), PureQuaternion{1, 0, 0}) < 1e-12);
        CHECK(dist(hopf(v2) / norm(hopf(v2)), w2) < 1e-12);
    }
    CHECK_THROWS_AS(lc_plane_lift({1, 0, 0}, {2, 0, 0}), DomainError);
    // orthonormal basis identity v̄1 i v1 = -v̄2 i v2
    const auto [v1, v2] = lc_plane_lift({0.3, -0.5, 0.8}, {0.8, 0.2, 1.0});
    const Quaternion u1 = v1 / norm(v1);
    const Quaternion o2 = v2 - dot(u1, v2) * u1;
    const Quaternion u2 = o2 / norm(o2);
    CHECK(dist(hopf(u1), -hopf(u2)) <= 1e-12);
}

TEST_CASE("Moebius maps") {
    CHECK(dist(phi1(Quaternion{}).value, -kI) < 1e-15);
    CHECK(dist(phi1(kOne).value, -kOne) < 1e-15);
    CHECK(dist(phi2(PureQuaternion{}).value, PureQuaternion{-1, 0, 0}) < 1e-15);
    CHECK(phi1(kI).infinite);
    CHECK(dist(phi1(ExtQuaternion::infinity()).value, kI) == 0.0);
    CHECK(phi2(PureQuaternion{1, 0, 0}).infinite);
    Rng rng(5, "transforms.moebius");
    for (int n = 0; n < 1000; ++n) {
        const Quaternion z = test::rand_quat(rng);
        CHECK(dist(phi1_inv(phi1(z)).value, z) <= 1e-13 * (1 + norm_sq(z)));
        const PureQuaternion q = test::rand_pure(rng);
        CHECK(dist(phi2_inv(phi2(q)).value, q) <= 1e-13 * (1 + norm_sq(q)));
        const double t = rng.uniform(-50.0, 50.0);
        const Quaternion a = phi1(Quaternion{t, 0, 0, 0}).value;
        CHECK(std::abs(norm(a) - 1.0) <= 1e-12);
        CHECK(a.z2 == 0.0);
        CHECK(a.z3 == 0.0);
    }
}

TEST_CASE("B.W. base map examples") {
    CHECK(dist(bw_base(Quaternion{0, 2, 0, 0}).value, PureQuaternion{1.25, 0, 0}) < 1e-15);
    CHECK(bw_base(Quaternion{3, 0, 0, 0}).infinite);
    CHECK(dist(bw_base(-kI).value, PureQuaternion{-1, 0, 0}) < 1e-15);
    CHECK(dist(bw_base_chain(-kI).value, PureQuaternion{-1, 0, 0}) < 1e-15);
    CHECK(dist(bw_base(kI).value, PureQuaternion{1, 0, 0}) < 1e-15);
}

TEST_CASE("B.W. base map equals the composition and restricts to Birkhoff's map") {
    Rng rng(6, "transforms.bw_base");
    for (int n = 0; n < 1000; ++n) {
        const Quaternion z = test::rand_quat(rng);
        const PureQuaternion a = bw_base(z).value, b = bw_base_chain(z).value;
        CHECK(dist(a, b) <= 1e-12 * (1 + norm(a)));
        const Complex zeta(rng.uniform(-2, 2), rng.uniform(0.1, 2));
        const Complex x = (zeta + 1.0 / zeta) / 2.0;
        const PureQuaternion img = bw_base(Quaternion{zeta.real(), zeta.imag(), 0, 0}).value;
        // the (1, i) plane goes to the real line of i (x1 axis), i.e. the planar map lands on Re+Im i
        CHECK(std::abs(img.q2) + std::abs(img.q3) <= 1e-12 * (1 + std::abs(x)));
    }
}

TEST_CASE("B.W. phase map") {
    // Λ̂ constraint at (2i, j)
    CHECK(lambda_hat_constraint(Quaternion{0, 2, 0, 0}, kJ) == doctest::Approx(0.0));
    const BwImage im = bw_phase({Quaternion{0, 2, 0, 0}, kJ});
    CHECK(dist(im.x, PureQuaternion{1.25, 0, 0}) < 1e-12);
    CHECK_THROWS_AS(bw_phase({Quaternion{0.1, 2, 0.3, 0}, kOne}), ConstraintError);
    CHECK_THROWS_AS(bw_lift({1, 0, 0}, {}, 0.0), DomainError);
    const LambdaHatPoint zero = bw_lift({1.25, 0, 0}, {}, 0.0);
    CHECK(dist(zero.w, Quaternion{}) == 0.0);
    CHECK(dist(bw_base(zero.z).value, PureQuaternion{1.25, 0, 0}) < 1e-12);

    Rng rng(8, "transforms.bw_phase");
    for (int n = 0; n < 1000; ++n) {
        const LambdaHatPoint pt = rand_lambda(rng);
        CHECK(on_lambda_hat(pt, 1e-10));
        const BwImage x = bw_phase(pt);
        CHECK(dist(x.x, bw_base(pt.z).value) <= 1e-12 * (1 + norm(x.x)));
        const double d = norm(conj(pt.z) - pt.z);
        const double zm = norm(pt.z - kI), zp = norm(pt.z + kI);
        const PureQuaternion e{1, 0, 0};
        CHECK(std::abs(norm(x.x - e) - zm * zm / d) <= 1e-10 * (1 + zm * zm / d));
        CHECK(std::abs(norm(x.x + e) - zp * zp / d) <= 1e-10 * (1 + zp * zp / d));
        const double y2 = std::pow(d, 4) * norm_sq(pt.w) / (4 * zm * zm * zp * zp);
        CHECK(std::abs(norm_sq(x.y) - y2) <= 1e-10 * (1 + y2));

        const PureQuaternion X = test::rand_pure(rng), Y = test::rand_pure(rng);
        if (norm(X - e) < 0.1 || norm(X + e) < 0.1) continue;
        const LambdaHatPoint l1 = bw_lift(X, Y, rng.uniform(0, 2 * M_PI));
        const LambdaHatPoint l2 = bw_lift(X, Y, rng.uniform(0, 2 * M_PI));
        CHECK(on_lambda_hat(l1, 1e-9));
        for (const auto& l : {l1, l2}) {
            const BwImage b = bw_phase(l, 1e-8);
            CHECK(dist(b.x, X) <= 1e-10 * (1 + norm(X)));
            CHECK(dist(b.y, Y) <= 1e-10 * (1 + norm(Y) * (1 + norm_sq(X))));
        }
    }
}

TEST_CASE("Birkhoff surfaces") {
    const BirkhoffSurface plane = birkhoff_surface(0.0, 1.0, 0.0);
    CHECK(plane.kind == BirkhoffSurface::Kind::plane);
    CHECK(plane.contains(Quaternion{0, 0.7, 0, -1.3}));
    CHECK_FALSE(plane.contains(Quaternion{0, 0.7, 0.2, -1.3}));
    CHECK_FALSE(plane.contains(Quaternion{0.1, 0.7, 0, -1.3}));
    const BirkhoffSurface sphere = birkhoff_surface(M_PI / 2, 1.0, 0.0);
    CHECK(sphere.contains(kOne));
    Rng rng(9, "transforms.birkhoff");
    for (int n = 0; n < 200; ++n) {
        const double theta = rng.uniform(0.05, M_PI - 0.05);
        const double k2 = rng.uniform(-1, 1), k3 = rng.uniform(-1, 1);
        const BirkhoffSurface s = birkhoff_surface(theta, k2, k3);
        const Quaternion z = s.point(rng.uniform(0.2, 3.0), rng.uniform(0.1, M_PI - 0.1));
        CHECK(s.contains(z, 1e-10));
        const auto x = bw_base(z);
        if (!x.infinite) CHECK(std::abs(k2 * x.value.q2 + k3 * x.value.q3) <= 1e-10 * (1 + norm(x.value)));
    }
}

TEST_CASE("z_theta chart") {
    CHECK(dist(z_theta(2, M_PI / 2, 0, 0), 2.0 * kJ) < 1e-15);
    // the sign of the real part differs from the printed example; see the decisions ledger
    CHECK(dist(z_theta(2, M_PI / 2, 0, M_PI / 2), Quaternion{0.6, 0, 0, 0.8}) < 1e-15);
    Rng rng(10, "transforms.ztheta");
    for (int n = 0; n < 1000; ++n) {
        const double psi = rng.uniform(0.1, 3.0), kappa = rng.uniform(0, 2 * M_PI), theta = rng.uniform(0, 2 * M_PI);
        const Quaternion u = z_theta(1.0, psi, kappa, theta);
        const Quaternion expect{0, std::cos(psi), std::sin(psi) * std::cos(theta + kappa),
                                std::sin(psi) * std::sin(theta + kappa)};
        CHECK(dist(u, expect) <= 1e-14);
        const double r = rng.uniform(0.2, 4.0);
        // deck transformation of the chart
        CHECK(dist(z_theta(r, psi, kappa, theta), z_theta(1 / r, psi, kappa + M_PI, theta + M_PI)) <= 1e-13 * (1 + r));
        // exact Jacobian against central differences
        const Eigen::Matrix4d J = z_theta_jacobian(r, psi, kappa, theta);
        const double h = 1e-6;
        for (int c = 0; c < 4; ++c) {
            double a[4] = {r, psi, kappa, theta}, b[4] = {r, psi, kappa, theta};
            a[c] += h;
            b[c] -= h;
            const Quaternion fd = (z_theta(a[0], a[1], a[2], a[3]) - z_theta(b[0], b[1], b[2], b[3])) / (2 * h);
            for (int k = 0; k < 4; ++k) CHECK(std::abs(J(k, c) - fd[k]) <= 1e-7 * (1 + std::abs(fd[k])));
        }
    }
}

TEST_CASE("spherical chart round trip and one-form") {
    Rng rng(12, "transforms.spherical");
    for (int n = 0; n < 1000; ++n) {
        SphericalState s;
        s.r = rng.uniform(1.1, 3.0);
        s.psi = rng.uniform(0.2, M_PI - 0.2);
        s.kappa = rng.uniform(0, 2 * M_PI);
        s.theta = rng.uniform(0, 2 * M_PI);
        s.P_r = rng.uniform(-1, 1);
        s.P_psi = rng.uniform(-1, 1);
        s.P_kappa = rng.uniform(-1, 1);
        s.P_theta = rng.uniform(-1, 1);
        const PhasePointH pt = spherical_to_phase(s);
        const SphericalState b = spherical_from_phase(pt, s.theta);
        CHECK(std::abs(b.r - s.r) <= 1e-10);
        CHECK(std::abs(b.psi - s.psi) <= 1e-10);
        CHECK(std::abs(wrap_angle(b.kappa - s.kappa + M_PI) - M_PI) <= 1e-10);
        CHECK(std::abs(wrap_angle(b.theta - s.theta + M_PI) - M_PI) <= 1e-10);
        for (double a : {b.P_r - s.P_r, b.P_psi - s.P_psi, b.P_kappa - s.P_kappa, b.P_theta - s.P_theta})
            CHECK(std::abs(a) <= 1e-10);
        // P_theta = 0 is the Λ̂ condition
        s.P_theta = 0.0;
        const PhasePointH q = spherical_to_phase(s);
        CHECK(std::abs(lambda_hat_constraint(q.z, q.w)) <= 1e-10 * (1 + norm_sq(q.z) * norm(q.w)));
        // one-form: Re(w̄ dz) = P · d(chart)
        const Eigen::Matrix4d J = z_theta_jacobian(s.r, s.psi, s.kappa, s.theta);
        Eigen::Vector4d w(q.w.z0, q.w.z1, q.w.z2, q.w.z3);
        const Eigen::Vector4d P = J.transpose() * w;
        CHECK(std::abs(P(0) - s.P_r) <= 1e-8);
        CHECK(std::abs(P(1) - s.P_psi) <= 1e-8);
        CHECK(std::abs(P(2) - s.P_kappa) <= 1e-8);
        CHECK(std::abs(P(3)) <= 1e-8);
    }
    SphericalState sing;
    sing.psi = 0.0;
    sing.r = 2.0;
    CHECK_THROWS(spherical_to_phase(sing));
}
