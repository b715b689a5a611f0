#include <doctest.h>

#include "regulus/errors.hpp"
#include "regulus/geometry.hpp"
#include "test_util.hpp"

using namespace regulus;
using regulus::test::dist;

namespace {

Eigen::Vector4d vec(const Quaternion& z) { return {z.z0, z.z1, z.z2, z.z3}; }

// Points of {z^T A z = 1} along random rays.
std::vector<Quaternion> sample(const Eigen::Matrix4d& A, Rng& rng, int n) {
    std::vector<Quaternion> out;
    while (static_cast<int>(out.size()) < n) {
        const Quaternion u = test::rand_quat(rng, 1.0);
        const double q = vec(u).dot(A * vec(u));
        if (q > 1e-3) out.push_back(u / std::sqrt(q));
    }
    return out;
}

}  // namespace

TEST_CASE("normal form") {
    NormalForm nf = normal_form(Eigen::Matrix4d::Identity());
    for (const auto& e : nf.entries) {
        CHECK(e.sigma == 1);
        CHECK(e.a == doctest::Approx(1.0));
    }
    nf = normal_form(Eigen::Vector4d(0.5, -1.0 / 3, 0.5, -1.0 / 3).asDiagonal());
    int plus = 0, minus = 0;
    for (const auto& e : nf.entries) {
        if (e.sigma > 0) {
            ++plus;
            CHECK(e.a == doctest::Approx(std::sqrt(2.0)));
        } else {
            ++minus;
            CHECK(e.a == doctest::Approx(std::sqrt(3.0)));
        }
    }
    CHECK(plus == 2);
    CHECK(minus == 2);
    Rng rng(1, "geometry.normal_form");
    for (int n = 0; n < 200; ++n) {
        Eigen::Matrix4d M;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) M(r, c) = rng.uniform(-1, 1);
        const Eigen::Matrix4d A = M + M.transpose();
        CHECK((normal_form(A).reconstruct() - A).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const NormalForm deg = normal_form(Eigen::Vector4d(1, 0, 1, 0).asDiagonal());
    CHECK(deg.entries[3].sigma == 0);
    CHECK(std::isinf(deg.entries[3].a));
}

TEST_CASE("S1 invariance") {
    CHECK(is_s1_invariant(Eigen::Matrix4d::Identity() / 4.0));
    CHECK(is_s1_invariant(u_coordinate_form(0.5, 1.0)));
    CHECK(is_s1_invariant(u_coordinate_form(0.5, -1.0)));
    CHECK_FALSE(is_s1_invariant(Eigen::Vector4d(1, 2, 3, 4).asDiagonal()));
    Rng rng(2, "geometry.s1");
    for (int n = 0; n < 100; ++n) {
        const PureQuaternion b = test::rand_pure(rng);
        const double a = rng.uniform(-2, 2);
        const Eigen::Matrix4d A = s1_form(a, b);
        CHECK(is_s1_invariant(A));
        const S1Decomposition d = s1_decompose(A);
        CHECK(std::abs(d.a - a) <= 1e-12);
        CHECK(dist(d.b, b) <= 1e-12);
        const Quaternion z = test::rand_quat(rng);
        const double theta = rng.uniform(0, 2 * M_PI);
        const Quaternion ez = exp_i(theta) * z;
        CHECK(std::abs(vec(ez).dot(A * vec(ez)) - vec(z).dot(A * vec(z))) <= 1e-12 * (1 + norm_sq(z)));
        CHECK(std::abs(vec(z).dot(A * vec(z)) - (a * norm_sq(z) + dot(b, hopf(z)))) <= 1e-12 * (1 + norm_sq(z)));
    }
}

TEST_CASE("dual quadric") {
    const CenteredQuadric4 q{Eigen::Vector4d(1, -1, 1, -1).asDiagonal()};
    const CenteredQuadric4 d = dual_quadric(q);
    CHECK((d.A - Eigen::Matrix4d(Eigen::Vector4d(-1, 1, -1, 1).asDiagonal())).norm() == 0.0);
    CHECK((dual_quadric(d).A - q.A).norm() == 0.0);
    CHECK_THROWS_AS(dual_quadric(CenteredQuadric4{Eigen::Matrix4d::Identity()}), DomainError);
}

TEST_CASE("Hopf image classification examples") {
    const double R = 1.7;
    const FocusedQuadric3 s = hopf_image_classify({Eigen::Matrix4d::Identity() / (R * R)});
    CHECK(s.kind == FocusedQuadric3::Kind::centered_sphere);
    CHECK(s.semi_axis == doctest::Approx(R * R).epsilon(1e-14));

    const double A = std::sqrt(2.0), B = 1.0;
    const Eigen::Matrix4d M = u_coordinate_form(1 / (A * A), 1 / (B * B));
    const FocusedQuadric3 sp = hopf_image_classify({M});
    REQUIRE(sp.kind == FocusedQuadric3::Kind::spheroid);
    CHECK(sp.semi_axis == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(sp.semi_minor == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    bool origin_focus = false;
    for (const auto& f : sp.foci()) origin_focus = origin_focus || norm(f) < 1e-12;
    CHECK(origin_focus);

    const FocusedQuadric3 par = hopf_image_classify({u_coordinate_form(1 / (A * A), 0.0)});
    CHECK(par.kind == FocusedQuadric3::Kind::paraboloid);
    CHECK(norm(par.foci().at(0)) < 1e-12);

    const FocusedQuadric3 hyp = hopf_image_classify({u_coordinate_form(1.0, -0.5)});
    CHECK(hyp.kind == FocusedQuadric3::Kind::hyperboloid_sheet);

    CHECK_THROWS_AS(hopf_image_classify({Eigen::Vector4d(1, 2, 3, 4).asDiagonal()}), ConstraintError);
}

TEST_CASE("sampled Hopf images satisfy the classified equation") {
    Rng rng(3, "geometry.classify");
    for (int n = 0; n < 60; ++n) {
        const double l13 = rng.uniform(0.2, 2.0);
        const double l24 = n % 3 == 0 ? rng.uniform(0.2, 2.0) : n % 3 == 1 ? -rng.uniform(0.2, 2.0) : 0.0;
        // random S1-invariant rotation of the pattern
        const PureQuaternion axis = test::rand_pure(rng);
        const Eigen::Matrix4d M = s1_form((l13 + l24) / 2, (l13 - l24) / 2 / norm(axis) * axis);
        const FocusedQuadric3 f = hopf_image_classify({M});
        for (const Quaternion& z : sample(M, rng, 50)) {
            if (norm(z) > 5) continue;
            const PureQuaternion x = hopf(z);
            CHECK(std::abs(f.implicit(x)) <= 1e-9);
        }
    }
}

TEST_CASE("G2 cofactor has no real zeros") {
    const FocusedQuadric3 sp = hopf_image_classify({u_coordinate_form(0.5, 1.0)});
    Rng rng(4, "geometry.g2");
    double lo = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 10000; ++n) lo = std::min(lo, g2_cofactor(sp, test::rand_quat(rng)));
    CHECK(lo > 0.0);
}

TEST_CASE("r-confocal walls") {
    const FocusedQuadric3 s = rconfocal_spheroid(1.0);
    CHECK(s.implicit({std::sqrt(2.0), 0, 0}) == doctest::Approx(0.0));
    CHECK(s.implicit({0, 1, 0}) == doctest::Approx(0.0));
    for (const auto& f : s.foci()) CHECK(std::abs(std::abs(f.q1) - 1.0) + std::abs(f.q2) + std::abs(f.q3) < 1e-14);
    const FocusedQuadric3 h = rconfocal_hyperboloid(0.5, 1);
    CHECK(h.implicit({0.5, 0, 0}) == doctest::Approx(0.0));
    const double x1 = std::sqrt(0.25 * (1 + 4.0 / 3.0));
    CHECK(h.implicit({x1, 1.0, 0}) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(h.on_branch({x1, 1.0, 0}));
    CHECK_FALSE(h.on_branch({-x1, 1.0, 0}));
    for (const auto& f : h.foci()) CHECK(std::abs(std::abs(f.q1) - 1.0) < 1e-14);
    CHECK_THROWS_AS(rconfocal_spheroid(std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(rconfocal_spheroid(0.0), DomainError);
    CHECK_THROWS_AS(rconfocal_hyperboloid(1.0, 1), DomainError);
    CHECK_THROWS_AS(rconfocal_hyperboloid(0.5, 0), DomainError);
    // sphere r0 and cone psi0 images
    CHECK(rconfocal_from_sphere(2.0).semi_minor == doctest::Approx(0.75));
    CHECK(rconfocal_from_cone(M_PI / 3).semi_axis == doctest::Approx(0.5));
    CHECK(rconfocal_from_cone(M_PI / 2).kind == FocusedQuadric3::Kind::plane);
}

TEST_CASE("nearest point") {
    const double R = 1.3;
    const ImplicitSurface3 sphere = surface_of(hopf_image_classify({Eigen::Matrix4d::Identity() / (R * R)}));
    CHECK(norm(nearest_point(sphere, {})) == doctest::Approx(R * R).epsilon(1e-10));

    const FocusedQuadric3 sp = hopf_image_classify({u_coordinate_form(0.5, 1.0)});
    const double C = sp.semi_axis, D = sp.semi_minor;
    CHECK(norm(nearest_point(surface_of(sp), {})) == doctest::Approx(C - std::sqrt(C * C - D * D)).epsilon(1e-8));

    const double d = 0.8;
    ImplicitSurface3 plane{[d](const PureQuaternion& x) { return x.q2 - d; },
                           [](const PureQuaternion&) { return PureQuaternion{0, 1, 0}; }};
    const PureQuaternion foot = nearest_point(plane, {});
    CHECK(dist(foot, PureQuaternion{0, d, 0}) < 1e-10);
}
