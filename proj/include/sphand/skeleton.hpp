#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sphand/errors.hpp"

namespace sphand {

// One recording: per-frame, per-body, per-joint 3D coordinates.
// Layout: coords[((t * bodies + m) * joints + v) * 3 + axis].
// Immutable by convention once built; treat as a value type.
struct SkeletonSequence {
    int frames = 0; // T
    int bodies = 0; // M
    int joints = 0; // V
    std::vector<double> coords;
    std::vector<std::string> joint_names; // optional, size V when present
    std::optional<int> label;
    std::optional<int> subject_id;
    std::optional<int> setup_id;

    static SkeletonSequence zeros(int t, int m, int v) {
        SkeletonSequence s;
        s.frames = t;
        s.bodies = m;
        s.joints = v;
        s.coords.assign(static_cast<std::size_t>(t) * m * v * 3, 0.0);
        return s;
    }

    std::size_t offset(int t, int m, int v) const {
        return ((static_cast<std::size_t>(t) * bodies + m) * joints + v) * 3;
    }

    double* at(int t, int m, int v) { return coords.data() + offset(t, m, v); }
    const double* at(int t, int m, int v) const { return coords.data() + offset(t, m, v); }

    bool shape_matches(const SkeletonSequence& other) const {
        return frames == other.frames && bodies == other.bodies && joints == other.joints;
    }

    void check_invariants() const {
        if (frames < 1 || bodies < 1 || joints < 1)
            throw ShapeError("SkeletonSequence: T, M, V must all be >= 1");
        if (coords.size() != static_cast<std::size_t>(frames) * bodies * joints * 3)
            throw ShapeError("SkeletonSequence: coords size mismatch");
    }
};

} // namespace sphand
