#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sphand/config.hpp"
#include "sphand/geometry.hpp"
#include "sphand/skeleton.hpp"

namespace sphand {

// Per-sample rigid rotation applied after the motion is generated.
enum class RotationSetting { none, about_up_axis, so3_uniform };

RotationSetting rotation_setting_from_string(const std::string& s);
std::string rotation_setting_to_string(RotationSetting r);

// One gesture class: a trajectory family plus its parameter ranges. Jitters
// are relative (amplitude and frequency scale by uniform [1-j, 1+j]); the
// phase is uniform in [0, phase_jitter).
struct GestureSpec {
    int class_id = 0;
    std::string family;
    double amplitude = 0.25;
    double amp_jitter = 0.5;
    double freq = 1.0; // cycles over the sequence
    double freq_jitter = 0.3;
    double phase_jitter = 6.283185307179586;
    double noise_sigma = 0.01;
};

// Dataset-level generation config. Each sample is placed the way real
// recordings land in front of a sensor: a random resting orientation
// (spin about the up axis, tilt away from it), a random offset inside a
// cube of half-width place_shift, and a random size factor in
// [1 - place_scale, 1 + place_scale]. rotation_train/rotation_test choose
// the extra per-sample rigid rotation for the two generation passes.
struct BenchSpec {
    int joints = 8; // 8 or 21 template
    Axis up_axis = Axis::y;
    int frames = 64;
    double orient_spin = 6.283185307179586;
    double orient_tilt = 3.141592653589793;
    double place_shift = 0.8;
    double place_scale = 0.3;
    RotationSetting rotation_train = RotationSetting::none;
    RotationSetting rotation_test = RotationSetting::so3_uniform;
    std::vector<GestureSpec> classes;

    static BenchSpec defaults();
    static BenchSpec from_kv(const KeyValueConfig& kv);
};

const std::vector<std::string>& known_families();

// Resting pose for the 8- or 21-joint hand, roughly unit-sized, palm facing
// the template z direction with the up axis along y.
std::vector<Vec3> hand_template(int joints);

// n_per_class labeled sequences per gesture class. Deterministic for a
// given rng state: every sample consumes one sub-seed drawn in fixed order.
std::vector<SkeletonSequence> generate(const BenchSpec& spec, int n_per_class, int frames,
                                       std::mt19937_64& rng, RotationSetting rotation);

// Label-stratified disjoint partition; fraction is the train share.
std::pair<std::vector<SkeletonSequence>, std::vector<SkeletonSequence>> split(
    const std::vector<SkeletonSequence>& dataset, double fraction, std::mt19937_64& rng);

} // namespace sphand
