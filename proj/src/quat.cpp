#include "regulus/quat.hpp"

#include "regulus/errors.hpp"

namespace regulus {

Quaternion mul(const Quaternion& a, const Quaternion& b) {
    return {
        a.z0 * b.z0 - a.z1 * b.z1 - a.z2 * b.z2 - a.z3 * b.z3,
        a.z0 * b.z1 + a.z1 * b.z0 + a.z2 * b.z3 - a.z3 * b.z2,
        a.z0 * b.z2 - a.z1 * b.z3 + a.z2 * b.z0 + a.z3 * b.z1,
        a.z0 * b.z3 + a.z1 * b.z2 - a.z2 * b.z1 + a.z3 * b.z0,
    };
}

Quaternion conj(const Quaternion& z) { return {z.z0, -z.z1, -z.z2, -z.z3}; }

double norm_sq(const Quaternion& z) { return z.z0 * z.z0 + z.z1 * z.z1 + z.z2 * z.z2 + z.z3 * z.z3; }

double norm(const Quaternion& z) { return std::sqrt(norm_sq(z)); }

Quaternion inverse(const Quaternion& z) {
    const double n2 = norm_sq(z);
    if (n2 == 0.0) throw DomainError("zero quaternion");
    return conj(z) / n2;
}

double dot(const Quaternion& a, const Quaternion& b) {
    return a.z0 * b.z0 + a.z1 * b.z1 + a.z2 * b.z2 + a.z3 * b.z3;
}

PureQuaternion imag(const Quaternion& z) { return {z.z1, z.z2, z.z3}; }

Quaternion exp_i(double theta) { return {std::cos(theta), std::sin(theta), 0.0, 0.0}; }

PureQuaternion hopf(const Quaternion& z) {
    const double a = z.z0, b = z.z1, c = z.z2, d = z.z3;
    return {a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (a * c + b * d)};
}

double bl(const Quaternion& z, const Quaternion& w) {
    return -z.z0 * w.z1 + z.z1 * w.z0 - z.z2 * w.z3 + z.z3 * w.z2;
}

double dot(const PureQuaternion& a, const PureQuaternion& b) { return a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3; }
double norm_sq(const PureQuaternion& q) { return dot(q, q); }
double norm(const PureQuaternion& q) { return std::sqrt(norm_sq(q)); }

PureQuaternion cross(const PureQuaternion& a, const PureQuaternion& b) {
    return {a.q2 * b.q3 - a.q3 * b.q2, a.q3 * b.q1 - a.q1 * b.q3, a.q1 * b.q2 - a.q2 * b.q1};
}

}  // namespace regulus
