#include "sphand/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <set>

#include "sphand/errors.hpp"

namespace sphand {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Axis axis_from_string(const std::string& s) {
    if (s == "x") return Axis::x;
    if (s == "y") return Axis::y;
    if (s == "z") return Axis::z;
    throw ConfigError("unknown axis '" + s + "' (expected x, y or z)");
}

std::string axis_to_string(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        default: return "z";
    }
}

SphericalPoint cart_to_spherical(double x, double y, double z, Axis up_axis) {
    // Cyclic permutation keeps handedness, so phi advances with a
    // right-handed rotation about the up axis.
    double px = x, py = y, pz = z;
    switch (up_axis) {
        case Axis::z: break;
        case Axis::y: px = z; py = x; pz = y; break;
        case Axis::x: px = y; py = z; pz = x; break;
    }

    const double rho = std::hypot(px, py);
    const double r = std::hypot(rho, pz);
    if (r == 0.0) return {0.0, 0.0, 0.0};

    const double theta = std::atan2(rho, pz);
    double phi = 0.0;
    if (px != 0.0 || py != 0.0) {
        phi = std::atan2(py, px);
        if (phi < 0.0) phi += kTwoPi;
        if (phi >= kTwoPi) phi = 0.0;
    }
    return {r, theta, phi};
}

Rotation Rotation::about_axis(Axis axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Rotation r;
    switch (axis) {
        case Axis::x:
            r.m = {1, 0, 0, 0, c, -s, 0, s, c};
            break;
        case Axis::y:
            r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
            break;
        case Axis::z:
            r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
            break;
    }
    return r;
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    w /= n; x /= n; y /= n; z /= n;
    Rotation r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return r;
}

double Rotation::max_orthonormality_defect() const {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[k * 3 + i] * m[k * 3 + j];
            worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

double Rotation::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Rotation sample_rotation(std::mt19937_64& rng, RotationMode mode, Axis up_axis) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (mode == RotationMode::about_up_axis) {
        const double angle = unit(rng) * kTwoPi;
        return Rotation::about_axis(up_axis, angle);
    }
    // Shoemake's subgroup algorithm: uniform unit quaternion.
    const double u1 = unit(rng);
    const double t1 = unit(rng) * kTwoPi;
    const double t2 = unit(rng) * kTwoPi;
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return Rotation::from_quaternion(a * std::sin(t1), a * std::cos(t1), b * std::sin(t2),
                                     b * std::cos(t2));
}

SkeletonSequence rotate(const SkeletonSequence& seq, const Rotation& r) {
    SkeletonSequence out = seq;
    const std::size_t n = seq.coords.size() / 3;
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = seq.coords.data() + i * 3;
        Vec3 v = r.apply({p[0], p[1], p[2]});
        double* q = out.coords.data() + i * 3;
        q[0] = v.x;
        q[1] = v.y;
        q[2] = v.z;
    }
    return out;
}

LocalSphericalField to_local(const SkeletonSequence& seq, const std::vector<int>& subset,
                             Axis up_axis) {
    seq.check_invariants();
    if (subset.size() < 2) throw ConfigError("joint subset must contain at least 2 joints");
    std::set<int> unique(subset.begin(), subset.end());
    if (unique.size() != subset.size()) throw ConfigError("joint subset contains duplicate ids");
    for (int id : subset)
        if (id < 0 || id >= seq.joints)
            throw ConfigError("joint subset id " + std::to_string(id) + " out of range [0, " +
                              std::to_string(seq.joints) + ")");

    LocalSphericalField field;
    field.frames = seq.frames;
    field.bodies = seq.bodies;
    field.subset.assign(unique.begin(), unique.end());
    const int s = static_cast<int>(field.subset.size());
    field.points.resize(static_cast<std::size_t>(seq.frames) * seq.bodies * s * s);

    for (int t = 0; t < seq.frames; ++t)
        for (int m = 0; m < seq.bodies; ++m)
            for (int i = 0; i < s; ++i) {
                const double* center = seq.at(t, m, field.subset[i]);
                for (int j = 0; j < s; ++j) {
                    if (i == j) continue; // diagonal stays canonical (0,0,0)
                    const double* nb = seq.at(t, m, field.subset[j]);
                    field.points[field.index(t, m, i, j)] = cart_to_spherical(
                        nb[0] - center[0], nb[1] - center[1], nb[2] - center[2], up_axis);
                }
            }
    return field;
}

} // namespace sphand
