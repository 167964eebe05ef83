#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sphand/config.hpp"
#include "sphand/harmonics.hpp"
#include "sphand/skeleton.hpp"

namespace sphand {

// none keeps only the raw Cartesian channels; lshr / lsht append their
// embedding channels to them; lshr_only drops the raw channels; and
// random_baseline replaces the lshr values with standard-normal draws
// while keeping the exact lshr channel layout.
enum class EmbedMode { none, lshr, lsht, lshr_only, random_baseline };

EmbedMode embed_mode_from_string(const std::string& s);
std::string embed_mode_to_string(EmbedMode m);

enum class Modality { location, velocity };

Modality modality_from_string(const std::string& s);
std::string modality_to_string(Modality m);

struct EmbedConfig {
    EmbedMode mode = EmbedMode::none;
    ComplexFormat format = ComplexFormat::magnitude;
    std::vector<int> degrees = {1, 2};
    std::vector<int> hand_set;  // empty selects every joint
    Axis up_axis = Axis::y;
    int target_frames = 64;     // 0 keeps the original length
    int bodies = 0;             // 0 keeps the batch maximum; else truncate/pad
    Modality modality = Modality::location;
    double coord_scale = 1.0;   // applied to raw coordinates before anything else
    bool lsht_normalize = false;
    std::uint64_t seed = 1;     // only consumed by random_baseline

    static EmbedConfig from_kv(const KeyValueConfig& kv);
};

// Channels contributed by the embedding alone / by raw + embedding.
int embedding_channels(const EmbedConfig& cfg);
int total_channels(const EmbedConfig& cfg);

// Deterministic channel descriptors, raw first, then embedding channels in
// part-major (part, neighbor, degree, order) layout; random_baseline reuses
// the lshr names so ablation runs line up channel for channel.
std::vector<std::string> channel_names(const EmbedConfig& cfg);

// Model-ready batch, data[((n*M + m)*C + c)*T + t)*V + v].
struct FeatureTensor {
    int n = 0, m = 0, c = 0, t = 0, v = 0;
    std::vector<double> data;
    std::vector<std::string> channel_map;
    std::vector<int> labels; // -1 where a sequence carried no label

    static FeatureTensor zeros(int n, int m, int c, int t, int v);

    std::size_t index(int in, int im, int ic, int it, int iv) const {
        return ((((static_cast<std::size_t>(in) * m + im) * c + ic) * t + it) * v) + iv;
    }
    double& at(int in, int im, int ic, int it, int iv) { return data[index(in, im, ic, it, iv)]; }
    double at(int in, int im, int ic, int it, int iv) const {
        return data[index(in, im, ic, it, iv)];
    }
};

// Linear interpolation onto target uniformly spaced frames; a single input
// frame broadcasts, and target == T reproduces the input.
SkeletonSequence resize_temporal(const SkeletonSequence& seq, int target);

// Forward difference along time; the last frame is zero.
SkeletonSequence velocity(const SkeletonSequence& seq);

// Default NTU hand joints (0-based): left/right wrist, hand, hand tip, thumb.
std::vector<int> ntu_hand_set();

// Whitespace/comma-separated 0-based joint ids; '#' comments allowed.
std::vector<int> load_hand_set_file(const std::string& path);

// Empty set selects all joints; otherwise validates ids against V and
// returns them sorted ascending.
std::vector<int> resolve_hand_set(const std::vector<int>& hand_set, int joints);

// Full pipeline for one batch: scale, temporal resize, modality transform,
// body count fixup, then raw + embedding channel assembly. Embedding
// channels are exactly zero at joints outside the hand set and for body
// frames whose coordinates are all zero (absent bodies).
FeatureTensor assemble(const std::vector<SkeletonSequence>& batch, const EmbedConfig& cfg,
                       std::mt19937_64& rng);

// base or base.sktf writes/reads base.sktf plus the base.channels and
// base.labels sidecars.
void write_features(const FeatureTensor& tensor, const std::string& path);
FeatureTensor read_features(const std::string& path);

// Per-channel affine whitening. Stats come from one reference tensor
// (normally the training set) and are applied to any tensor with the same
// channel count; the deviation is floored so constant channels map to zero.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> sd;
};

ChannelStats channel_stats(const FeatureTensor& tensor);
void standardize(FeatureTensor& tensor, const ChannelStats& stats);

} // namespace sphand
