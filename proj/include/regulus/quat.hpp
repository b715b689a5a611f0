#pragma once

#include <array>
#include <cmath>

namespace regulus {

struct Quaternion {
    double z0 = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
    double z3 = 0.0;

    constexpr double operator[](int k) const { return k == 0 ? z0 : k == 1 ? z1 : k == 2 ? z2 : z3; }
    double& operator[](int k) { return k == 0 ? z0 : k == 1 ? z1 : k == 2 ? z2 : z3; }
    constexpr std::array<double, 4> array() const { return {z0, z1, z2, z3}; }
    static constexpr Quaternion from(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
    friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

struct PureQuaternion {
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;

    constexpr double operator[](int k) const { return k == 0 ? q1 : k == 1 ? q2 : q3; }
    double& operator[](int k) { return k == 0 ? q1 : k == 1 ? q2 : q3; }
    constexpr Quaternion quat() const { return {0.0, q1, q2, q3}; }
    constexpr std::array<double, 3> array() const { return {q1, q2, q3}; }
    friend constexpr bool operator==(const PureQuaternion&, const PureQuaternion&) = default;
};

inline constexpr Quaternion kOne{1.0, 0.0, 0.0, 0.0};
inline constexpr Quaternion kI{0.0, 1.0, 0.0, 0.0};
inline constexpr Quaternion kJ{0.0, 0.0, 1.0, 0.0};
inline constexpr Quaternion kK{0.0, 0.0, 0.0, 1.0};

Quaternion mul(const Quaternion& a, const Quaternion& b);
Quaternion conj(const Quaternion& z);
double norm_sq(const Quaternion& z);
double norm(const Quaternion& z);
Quaternion inverse(const Quaternion& z);
double dot(const Quaternion& a, const Quaternion& b);

/// Drops the scalar part. Callers are responsible for it being negligible.
PureQuaternion imag(const Quaternion& z);

/// cos(theta) + sin(theta) i
Quaternion exp_i(double theta);

/// z̄ i z, evaluated from the expanded real form so the scalar part is exactly zero.
PureQuaternion hopf(const Quaternion& z);

/// Re(z̄ i w)
double bl(const Quaternion& z, const Quaternion& w);

inline Quaternion operator+(const Quaternion& a, const Quaternion& b) {
    return {a.z0 + b.z0, a.z1 + b.z1, a.z2 + b.z2, a.z3 + b.z3};
}
inline Quaternion operator-(const Quaternion& a, const Quaternion& b) {
    return {a.z0 - b.z0, a.z1 - b.z1, a.z2 - b.z2, a.z3 - b.z3};
}
inline Quaternion operator-(const Quaternion& a) { return {-a.z0, -a.z1, -a.z2, -a.z3}; }
inline Quaternion operator*(double s, const Quaternion& a) { return {s * a.z0, s * a.z1, s * a.z2, s * a.z3}; }
inline Quaternion operator*(const Quaternion& a, double s) { return s * a; }
inline Quaternion operator/(const Quaternion& a, double s) { return {a.z0 / s, a.z1 / s, a.z2 / s, a.z3 / s}; }
inline Quaternion operator*(const Quaternion& a, const Quaternion& b) { return mul(a, b); }

inline PureQuaternion operator+(const PureQuaternion& a, const PureQuaternion& b) {
    return {a.q1 + b.q1, a.q2 + b.q2, a.q3 + b.q3};
}
inline PureQuaternion operator-(const PureQuaternion& a, const PureQuaternion& b) {
    return {a.q1 - b.q1, a.q2 - b.q2, a.q3 - b.q3};
}
inline PureQuaternion operator-(const PureQuaternion& a) { return {-a.q1, -a.q2, -a.q3}; }
inline PureQuaternion operator*(double s, const PureQuaternion& a) { return {s * a.q1, s * a.q2, s * a.q3}; }
inline PureQuaternion operator/(const PureQuaternion& a, double s) { return {a.q1 / s, a.q2 / s, a.q3 / s}; }

double dot(const PureQuaternion& a, const PureQuaternion& b);
double norm(const PureQuaternion& q);
double norm_sq(const PureQuaternion& q);
PureQuaternion cross(const PureQuaternion& a, const PureQuaternion& b);

}  // namespace regulus
