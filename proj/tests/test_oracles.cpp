#include <doctest.h>

#include "regulus/geometry.hpp"
#include "regulus/oracles.hpp"
#include "test_util.hpp"

using namespace regulus;

TEST_CASE("quadric fit oracle") {
    const FocusedQuadric3 s = rconfocal_spheroid(0.6);
    Rng rng(5, "geometry.fit");
    std::vector<PureQuaternion> pts;
    for (int n = 0; n < 500; ++n) {
        const double t = rng.uniform(0, M_PI), p = rng.uniform(0, 2 * M_PI);
        pts.push_back({std::sqrt(1 + 0.36) * std::cos(t), 0.6 * std::sin(t) * std::cos(p), 0.6 * std::sin(t) * std::sin(p)});
    }
    for (const auto& x : pts) CHECK(std::abs(s.implicit(x)) < 1e-12);
    const FittedSurface f = analyze_fit(fit_quadric(pts));
    CHECK(f.kind == "spheroid");
    REQUIRE(f.foci.size() == 2);
    for (const auto& q : f.foci) CHECK(std::abs(std::abs(q.q1) - 1.0) + std::abs(q.q2) + std::abs(q.q3) < 1e-8);

    std::vector<PureQuaternion> flat;
    for (int n = 0; n < 100; ++n) flat.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), 0.25});
    CHECK(analyze_fit(fit_quadric(flat)).kind == "degenerate");
    const PlaneFit pf = fit_plane(flat);
    CHECK(std::abs(std::abs(pf.normal.q3) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(pf.offset) - 0.25) < 1e-12);

    const std::vector<Eigen::Vector3d> a{{0, 0, 0}, {1, 0, 0}}, b{{0, 0.1, 0}, {1, 0.1, 0}};
    CHECK(hausdorff_polyline(a, b) == doctest::Approx(0.1));
    CHECK(distance_to_polyline({0.5, 0.3, 0}, a) == doctest::Approx(0.3));
}

TEST_CASE("fit oracle recognizes the other surface kinds") {
    Rng rng(6, "oracles.kinds");
    std::vector<PureQuaternion> sphere, hyp, par;
    for (int n = 0; n < 400; ++n) {
        const double t = rng.uniform(0, M_PI), p = rng.uniform(0, 2 * M_PI), u = rng.uniform(0.1, 2.0);
        sphere.push_back({0.3 + 2 * std::cos(t), -1 + 2 * std::sin(t) * std::cos(p), 2 * std::sin(t) * std::sin(p)});
        // x1^2/a^2 - rho^2/b^2 = 1, x1 > 0
        const double a = 0.6, b = 0.8;
        hyp.push_back({a * std::cosh(u), b * std::sinh(u) * std::cos(p), b * std::sinh(u) * std::sin(p)});
        // x3 = (x1^2 + x2^2) / 4 - 1, focus at the origin
        const double r = rng.uniform(0, 3);
        par.push_back({r * std::cos(p), r * std::sin(p), r * r / 4 - 1});
    }
    const FittedSurface s = analyze_fit(fit_quadric(sphere));
    CHECK(s.kind == "sphere");
    CHECK(s.semi_axis == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(test::dist(s.center, PureQuaternion{0.3, -1, 0}) < 1e-8);
    const FittedSurface h = analyze_fit(fit_quadric(hyp));
    CHECK(h.kind == "hyperboloid2");
    REQUIRE(h.foci.size() == 2);
    for (const auto& f : h.foci) CHECK(std::abs(std::abs(f.q1) - 1.0) < 1e-8);
    const FittedSurface q = analyze_fit(fit_quadric(par));
    CHECK(q.kind == "paraboloid");
    REQUIRE(q.foci.size() == 1);
    CHECK(norm(q.foci[0]) < 1e-8);
}
