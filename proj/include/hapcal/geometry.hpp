#pragma once

#include <array>
#include <cmath>

namespace hapcal {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

// 3x3 matrix, row major.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    // R^T v; inverse rotation for orthonormal matrices.
    Vec3 apply_transposed(const Vec3& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
                m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    // Rodrigues rotation about a unit axis.
    static Mat3 axis_angle(const Vec3& axis, double angle) {
        const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
        const double ax = axis.x, ay = axis.y, az = axis.z;
        Mat3 r;
        r.m = {t * ax * ax + c,      t * ax * ay - s * az, t * ax * az + s * ay,
               t * ax * ay + s * az, t * ay * ay + c,      t * ay * az - s * ax,
               t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c};
        return r;
    }

    // R = Rz(yaw) * Ry(pitch) * Rx(roll).
    static Mat3 from_rpy(double roll, double pitch, double yaw) {
        return axis_angle({0, 0, 1}, yaw) * axis_angle({0, 1, 0}, pitch) *
               axis_angle({1, 0, 0}, roll);
    }

    // Max absolute deviation of R^T R from the identity.
    double orthonormality_error() const {
        Mat3 g;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(k, i) * (*this)(k, j);
                g(i, j) = s - (i == j ? 1.0 : 0.0);
            }
        double e = 0.0;
        for (double v : g.m) e = std::max(e, std::fabs(v));
        return e;
    }
};

// Rigid transform p -> R p + t.
struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const {
        return rotation.apply(p) + translation;
    }

    Vec3 apply_inverse(const Vec3& p) const {
        return rotation.apply_transposed(p - translation);
    }

    RigidTransform compose(const RigidTransform& o) const {
        return {rotation * o.rotation,
                rotation.apply(o.translation) + translation};
    }
};

} // namespace hapcal
