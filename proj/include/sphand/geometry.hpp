#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "sphand/skeleton.hpp"

namespace sphand {

enum class Axis { x = 0, y = 1, z = 2 };

Axis axis_from_string(const std::string& s);
std::string axis_to_string(Axis a);

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

// (r, theta, phi) with r >= 0, theta in [0, pi], phi in [0, 2*pi).
// The zero vector canonicalizes to (0, 0, 0).
struct SphericalPoint {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

// Spherical conversion with the configured up axis playing the polar role.
// The input triple is permuted cyclically (handedness preserved) so that a
// rotation about up_axis shifts phi and leaves theta and r unchanged.
SphericalPoint cart_to_spherical(double x, double y, double z, Axis up_axis);
inline SphericalPoint cart_to_spherical(const Vec3& v, Axis up_axis) {
    return cart_to_spherical(v.x, v.y, v.z, up_axis);
}

// Proper rotation, row-major 3x3.
struct Rotation {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Rotation identity() { return {}; }
    static Rotation about_axis(Axis axis, double angle);
    static Rotation from_quaternion(double w, double x, double y, double z);

    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Rotation transposed() const {
        Rotation r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i * 3 + j] = m[j * 3 + i];
        return r;
    }

    Rotation operator*(const Rotation& o) const {
        Rotation r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }

    double max_orthonormality_defect() const;
    double determinant() const;
};

enum class RotationMode { about_up_axis, so3_uniform };

// about_up_axis: angle uniform in [0, 2*pi) about up_axis.
// so3_uniform: Haar-uniform via a uniform unit quaternion.
Rotation sample_rotation(std::mt19937_64& rng, RotationMode mode, Axis up_axis = Axis::y);

// Every joint coordinate p replaced by R * p; shapes and metadata unchanged.
SkeletonSequence rotate(const SkeletonSequence& seq, const Rotation& r);

// Per frame, per body, per (center, neighbor) pair within the joint subset:
// spherical coordinates of neighbor - center. Diagonal entries are the
// canonical degenerate point.
struct LocalSphericalField {
    int frames = 0;
    int bodies = 0;
    std::vector<int> subset; // sorted joint ids
    std::vector<SphericalPoint> points; // [t][m][center][neighbor]

    std::size_t index(int t, int m, int center, int neighbor) const {
        const std::size_t s = subset.size();
        return ((static_cast<std::size_t>(t) * bodies + m) * s + center) * s + neighbor;
    }
    const SphericalPoint& at(int t, int m, int center, int neighbor) const {
        return points[index(t, m, center, neighbor)];
    }
};

// subset must contain at least two distinct joint ids, all within [0, V).
LocalSphericalField to_local(const SkeletonSequence& seq, const std::vector<int>& subset,
                             Axis up_axis);

} // namespace sphand
