#include <doctest.h>

#include "regulus/errors.hpp"
#include "test_util.hpp"

using namespace regulus;
using regulus::test::dist;

TEST_CASE("multiplication table") {
    CHECK(kI * kJ == kK);
    CHECK(kJ * kI == -kK);
    CHECK(kJ * kK == kI);
    CHECK(kK * kI == kJ);
    CHECK(kI * kI == -kOne);
    const Quaternion q{0.3, -1.2, 2.5, 0.7};
    CHECK(kOne * q == q);
    CHECK(q * kOne == q);
    CHECK(dist((kOne + kI) * (kOne - kI), 2.0 * kOne) == 0.0);
}

TEST_CASE("conjugate, norm and inverse") {
    CHECK(conj(kI) == -kI);
    CHECK(norm(Quaternion{1, 1, 1, 1}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(inverse(Quaternion{}), DomainError);
    Rng rng(7, "quat.inverse");
    for (int n = 0; n < 1000; ++n) {
        const Quaternion a = test::rand_quat(rng), b = test::rand_quat(rng);
        CHECK(dist(conj(a * b), conj(b) * conj(a)) <= 1e-13);
        CHECK(dist(a * inverse(a), kOne) <= 1e-13);
        CHECK(std::abs(norm(a * b) - norm(a) * norm(b)) <= 1e-12 * norm(a) * norm(b));
        const Quaternion c = test::rand_quat(rng);
        CHECK(dist((a * b) * c, a * (b * c)) <= 1e-12 * (1 + norm(a) * norm(b) * norm(c)));
    }
}

TEST_CASE("hopf examples") {
    CHECK(hopf(kOne) == PureQuaternion{1, 0, 0});
    CHECK(hopf(kJ) == PureQuaternion{-1, 0, 0});
    CHECK(dist(hopf(kOne + kI), PureQuaternion{2, 0, 0}) == 0.0);
}

TEST_CASE("hopf agrees with the product formula and is fiber invariant") {
    Rng rng(11, "quat.hopf");
    for (int n = 0; n < 10000; ++n) {
        const Quaternion z = test::rand_quat(rng);
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const Quaternion prod = conj(z) * kI * z;
        const PureQuaternion h = hopf(z);
        CHECK(dist(h.quat(), Quaternion{0.0, prod.z1, prod.z2, prod.z3}) <= 1e-13 * (1 + norm_sq(z)));
        CHECK(std::abs(norm(h) - norm_sq(z)) <= 1e-13 * (1 + norm_sq(z)));
        CHECK(dist(hopf(exp_i(theta) * z), h) <= 1e-12 * std::max(1.0, norm_sq(z)));
    }
}

TEST_CASE("bl examples and invariance") {
    CHECK(bl(kOne, kI) == -1.0);
    CHECK(bl(kOne, kJ) == 0.0);
    Rng rng(13, "quat.bl");
    for (int n = 0; n < 1000; ++n) {
        const Quaternion z = test::rand_quat(rng), w = test::rand_quat(rng);
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        CHECK(std::abs(bl(z, z)) <= 1e-14 * (1 + norm_sq(z)));
        CHECK(std::abs(bl(exp_i(theta) * z, exp_i(theta) * w) - bl(z, w)) <= 1e-12 * (1 + norm(z) * norm(w)));
        CHECK(std::abs(bl(z, w) - (conj(z) * kI * w).z0) <= 1e-13 * (1 + norm(z) * norm(w)));
    }
}

TEST_CASE("pure quaternion helpers") {
    const PureQuaternion a{1, 0, 0}, b{0, 1, 0};
    CHECK(cross(a, b) == PureQuaternion{0, 0, 1});
    CHECK(dot(a, b) == 0.0);
    CHECK(norm(PureQuaternion{3, 4, 0}) == 5.0);
}

TEST_CASE("rng streams are reproducible and independent") {
    Rng a(5, "x"), b(5, "x"), c(5, "y");
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u != c.uniform());
    double mean = 0.0;
    for (int n = 0; n < 20000; ++n) mean += a.normal();
    CHECK(std::abs(mean / 20000.0) < 0.05);
}
