#include "sphand/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sphand/errors.hpp"
#include "sphand/skeleton_io.hpp"

namespace sphand {

EmbedMode embed_mode_from_string(const std::string& s) {
    if (s == "none") return EmbedMode::none;
    if (s == "lshr") return EmbedMode::lshr;
    if (s == "lsht") return EmbedMode::lsht;
    if (s == "lshr_only" || s == "lshr-only") return EmbedMode::lshr_only;
    if (s == "random_baseline" || s == "random") return EmbedMode::random_baseline;
    throw ConfigError("unknown embed mode '" + s + "'");
}

std::string embed_mode_to_string(EmbedMode m) {
    switch (m) {
        case EmbedMode::none: return "none";
        case EmbedMode::lshr: return "lshr";
        case EmbedMode::lsht: return "lsht";
        case EmbedMode::lshr_only: return "lshr_only";
        default: return "random_baseline";
    }
}

Modality modality_from_string(const std::string& s) {
    if (s == "location" || s == "loc") return Modality::location;
    if (s == "velocity" || s == "vel") return Modality::velocity;
    throw ConfigError("unknown modality '" + s + "'");
}

std::string modality_to_string(Modality m) {
    return m == Modality::location ? "location" : "velocity";
}

EmbedConfig EmbedConfig::from_kv(const KeyValueConfig& kv) {
    EmbedConfig cfg;
    cfg.mode = embed_mode_from_string(kv.get_string("embed_mode", "none"));
    cfg.format = complex_format_from_string(kv.get_string("embed_format", "magnitude"));
    if (kv.has("degrees")) cfg.degrees = normalize_degrees(kv.get_int_list("degrees"));
    if (kv.has("hand_set")) cfg.hand_set = kv.get_int_list("hand_set");
    cfg.up_axis = axis_from_string(kv.get_string("up_axis", "y"));
    cfg.target_frames = static_cast<int>(kv.get_int("target_frames", 64));
    cfg.bodies = static_cast<int>(kv.get_int("bodies", 0));
    cfg.modality = modality_from_string(kv.get_string("modality", "location"));
    cfg.coord_scale = kv.get_double("coord_scale", 1.0);
    cfg.lsht_normalize = kv.get_bool("lsht_normalize", false);
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("embed_seed", 1));
    if (cfg.target_frames < 0) throw ConfigError("target_frames must be >= 0");
    if (cfg.bodies < 0) throw ConfigError("bodies must be >= 0");
    return cfg;
}

namespace {

bool has_raw(EmbedMode mode) { return mode != EmbedMode::lshr_only; }

bool has_embedding(EmbedMode mode) { return mode != EmbedMode::none; }

// lshr-shaped modes keep one channel block per neighbor.
bool neighbor_resolved(EmbedMode mode) {
    return mode == EmbedMode::lshr || mode == EmbedMode::lshr_only ||
           mode == EmbedMode::random_baseline;
}

} // namespace

int embedding_channels(const EmbedConfig& cfg) {
    if (!has_embedding(cfg.mode)) return 0;
    const auto degrees = normalize_degrees(cfg.degrees);
    const int harm = static_cast<int>(harmonic_count(degrees));
    const int parts = format_parts(cfg.format);
    if (neighbor_resolved(cfg.mode)) {
        if (cfg.hand_set.empty())
            throw ConfigError("neighbor-resolved embedding needs an explicit hand set "
                              "to fix the channel count");
        return static_cast<int>(cfg.hand_set.size()) * harm * parts;
    }
    return harm * parts;
}

int total_channels(const EmbedConfig& cfg) {
    return (has_raw(cfg.mode) ? 3 : 0) + embedding_channels(cfg);
}

std::vector<std::string> channel_names(const EmbedConfig& cfg) {
    std::vector<std::string> names;
    if (has_raw(cfg.mode)) {
        const std::string stem = cfg.modality == Modality::velocity ? "vel" : "cart";
        names.push_back(stem + "_x");
        names.push_back(stem + "_y");
        names.push_back(stem + "_z");
    }
    if (!has_embedding(cfg.mode)) return names;

    // random_baseline shares the lshr map so ablations line up channel for
    // channel.
    const std::string stem = neighbor_resolved(cfg.mode) ? "lshr" : "lsht";
    const auto degrees = normalize_degrees(cfg.degrees);
    const auto order = harmonic_order(degrees);
    int neighbors = 1;
    if (neighbor_resolved(cfg.mode)) {
        if (cfg.hand_set.empty())
            throw ConfigError("neighbor-resolved embedding needs an explicit hand set "
                              "to fix the channel count");
        neighbors = static_cast<int>(cfg.hand_set.size());
    }
    for (const auto& part : format_part_names(cfg.format))
        for (int w = 0; w < neighbors; ++w)
            for (const auto& idx : order) {
                std::ostringstream os;
                os << stem << '_' << part;
                if (neighbor_resolved(cfg.mode)) os << "_n" << w;
                os << "_l" << idx.ell << "_m" << idx.m;
                names.push_back(os.str());
            }
    return names;
}

FeatureTensor FeatureTensor::zeros(int n, int m, int c, int t, int v) {
    FeatureTensor f;
    f.n = n;
    f.m = m;
    f.c = c;
    f.t = t;
    f.v = v;
    f.data.assign(static_cast<std::size_t>(n) * m * c * t * v, 0.0);
    return f;
}

SkeletonSequence resize_temporal(const SkeletonSequence& seq, int target) {
    seq.check_invariants();
    if (target < 1) throw ShapeError("resize_temporal: target must be >= 1");
    if (target == seq.frames) return seq;

    SkeletonSequence out = SkeletonSequence::zeros(target, seq.bodies, seq.joints);
    out.joint_names = seq.joint_names;
    out.label = seq.label;
    out.subject_id = seq.subject_id;
    out.setup_id = seq.setup_id;

    const std::size_t frame_len = static_cast<std::size_t>(seq.bodies) * seq.joints * 3;
    for (int t = 0; t < target; ++t) {
        double pos = 0.0;
        if (target > 1 && seq.frames > 1)
            pos = static_cast<double>(t) * (seq.frames - 1) / (target - 1);
        const int lo = std::min(static_cast<int>(pos), seq.frames - 1);
        const int hi = std::min(lo + 1, seq.frames - 1);
        const double frac = pos - lo;
        const double* a = seq.coords.data() + frame_len * lo;
        const double* b = seq.coords.data() + frame_len * hi;
        double* dst = out.coords.data() + frame_len * t;
        for (std::size_t i = 0; i < frame_len; ++i) dst[i] = a[i] + frac * (b[i] - a[i]);
    }
    return out;
}

SkeletonSequence velocity(const SkeletonSequence& seq) {
    seq.check_invariants();
    SkeletonSequence out = seq;
    const std::size_t frame_len = static_cast<std::size_t>(seq.bodies) * seq.joints * 3;
    for (int t = 0; t < seq.frames - 1; ++t) {
        const double* cur = seq.coords.data() + frame_len * t;
        const double* nxt = seq.coords.data() + frame_len * (t + 1);
        double* dst = out.coords.data() + frame_len * t;
        for (std::size_t i = 0; i < frame_len; ++i) dst[i] = nxt[i] - cur[i];
    }
    std::fill(out.coords.end() - frame_len, out.coords.end(), 0.0);
    return out;
}

std::vector<int> ntu_hand_set() { return {6, 7, 10, 11, 21, 22, 23, 24}; }

std::vector<int> load_hand_set_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open hand set file '" + path + "'");
    std::vector<int> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                const int id = std::stoi(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                ids.push_back(id);
            } catch (const std::exception&) {
                throw ConfigError("hand set file '" + path + "' line " +
                                  std::to_string(line_no) + ": bad joint id '" + tok + "'");
            }
        }
    }
    if (ids.empty()) throw ConfigError("hand set file '" + path + "' lists no joints");
    return ids;
}

std::vector<int> resolve_hand_set(const std::vector<int>& hand_set, int joints) {
    if (hand_set.empty()) {
        std::vector<int> all(static_cast<std::size_t>(std::max(joints, 0)));
        for (int i = 0; i < joints; ++i) all[i] = i;
        return all;
    }
    std::set<int> unique;
    for (int id : hand_set) {
        if (id < 0) throw ConfigError("hand set joint id must be >= 0");
        if (joints > 0 && id >= joints)
            throw ConfigError("hand set joint id " + std::to_string(id) +
                              " out of range for " + std::to_string(joints) + " joints");
        if (!unique.insert(id).second)
            throw ConfigError("duplicate hand set joint id " + std::to_string(id));
    }
    return std::vector<int>(unique.begin(), unique.end());
}

namespace {

SkeletonSequence prepare_sequence(const SkeletonSequence& seq, const EmbedConfig& cfg,
                                  int bodies_out) {
    SkeletonSequence s = seq;
    if (cfg.coord_scale != 1.0)
        for (double& c : s.coords) c *= cfg.coord_scale;
    if (cfg.target_frames > 0) s = resize_temporal(s, cfg.target_frames);
    if (cfg.modality == Modality::velocity) s = velocity(s);

    if (s.bodies != bodies_out) {
        SkeletonSequence fixed = SkeletonSequence::zeros(s.frames, bodies_out, s.joints);
        fixed.joint_names = s.joint_names;
        fixed.label = s.label;
        fixed.subject_id = s.subject_id;
        fixed.setup_id = s.setup_id;
        const int keep = std::min(s.bodies, bodies_out);
        for (int t = 0; t < s.frames; ++t)
            for (int m = 0; m < keep; ++m)
                std::copy_n(s.at(t, m, 0), static_cast<std::size_t>(s.joints) * 3,
                            fixed.at(t, m, 0));
        s = std::move(fixed);
    }
    return s;
}

bool body_frame_is_zero(const SkeletonSequence& seq, int t, int m) {
    const double* p = seq.at(t, m, 0);
    const std::size_t len = static_cast<std::size_t>(seq.joints) * 3;
    for (std::size_t i = 0; i < len; ++i)
        if (p[i] != 0.0) return false;
    return true;
}

} // namespace

FeatureTensor assemble(const std::vector<SkeletonSequence>& batch, const EmbedConfig& cfg,
                       std::mt19937_64& rng) {
    if (batch.empty()) throw ShapeError("assemble: empty batch");
    const int joints = batch.front().joints;
    for (const auto& seq : batch) {
        seq.check_invariants();
        if (seq.joints != joints)
            throw ShapeError("assemble: inconsistent joint counts across the batch");
    }

    int bodies_out = cfg.bodies;
    if (bodies_out == 0)
        for (const auto& seq : batch) bodies_out = std::max(bodies_out, seq.bodies);

    std::vector<SkeletonSequence> prepped;
    prepped.reserve(batch.size());
    for (const auto& seq : batch) prepped.push_back(prepare_sequence(seq, cfg, bodies_out));

    const int frames = prepped.front().frames;
    for (const auto& seq : prepped)
        if (seq.frames != frames)
            throw ShapeError("assemble: frame counts differ; set target_frames to resample");

    const std::vector<int> subset = resolve_hand_set(cfg.hand_set, joints);
    EmbedConfig counted = cfg;
    counted.hand_set = subset; // channel arithmetic needs the resolved set
    const int channels = total_channels(counted);

    FeatureTensor out =
        FeatureTensor::zeros(static_cast<int>(batch.size()), bodies_out, channels, frames, joints);
    out.channel_map = channel_names(counted);
    out.labels.reserve(batch.size());
    for (const auto& seq : batch) out.labels.push_back(seq.label.value_or(-1));

    const auto degrees = normalize_degrees(cfg.degrees);
    const auto order = harmonic_order(degrees);
    const std::size_t harm = order.size();
    const int parts = format_parts(cfg.format);
    const int s = static_cast<int>(subset.size());
    const int raw = has_raw(cfg.mode) ? 3 : 0;
    const int per_center =
        has_embedding(cfg.mode) ? (neighbor_resolved(cfg.mode) ? s : 1) * static_cast<int>(harm)
                                : 0;

    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t n = 0; n < prepped.size(); ++n) {
        const SkeletonSequence& seq = prepped[n];

        if (raw > 0)
            for (int t = 0; t < frames; ++t)
                for (int m = 0; m < bodies_out; ++m)
                    for (int v = 0; v < joints; ++v) {
                        const double* p = seq.at(t, m, v);
                        for (int c = 0; c < 3; ++c)
                            out.at(static_cast<int>(n), m, c, t, v) = p[c];
                    }

        if (!has_embedding(cfg.mode)) continue;

        if (cfg.mode == EmbedMode::random_baseline) {
            // Same channel block as lshr, filled with draws at hand joints.
            for (int t = 0; t < frames; ++t)
                for (int m = 0; m < bodies_out; ++m) {
                    if (body_frame_is_zero(seq, t, m)) continue;
                    for (int v : subset)
                        for (int c = raw; c < channels; ++c)
                            out.at(static_cast<int>(n), m, c, t, v) = normal(rng);
                }
            continue;
        }

        LocalSphericalField field = to_local(seq, subset, cfg.up_axis);
        HarmonicCoefficients coeffs = neighbor_resolved(cfg.mode)
                                          ? lshr_embed(field, degrees)
                                          : lsht_transform(field, degrees, cfg.lsht_normalize);

        std::vector<Complex> block(static_cast<std::size_t>(per_center));
        for (int t = 0; t < frames; ++t)
            for (int m = 0; m < bodies_out; ++m) {
                if (body_frame_is_zero(seq, t, m)) continue;
                for (int ci = 0; ci < s; ++ci) {
                    const std::size_t base = coeffs.index(t, m, ci, 0, 0);
                    std::copy_n(coeffs.values.begin() + static_cast<std::ptrdiff_t>(base),
                                per_center, block.begin());
                    const std::vector<double> formatted = complex_format(block, cfg.format);
                    const int joint = subset[ci];
                    for (int c = 0; c < per_center * parts; ++c)
                        out.at(static_cast<int>(n), m, raw + c, t, joint) = formatted[c];
                }
            }
    }
    return out;
}

namespace {

std::string strip_sktf_suffix(const std::string& path) {
    const std::string suffix = ".sktf";
    if (path.size() > suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size());
    return path;
}

} // namespace

void write_features(const FeatureTensor& tensor, const std::string& path) {
    const std::string base = strip_sktf_suffix(path);
    NdArray array({static_cast<std::size_t>(tensor.n), static_cast<std::size_t>(tensor.m),
                   static_cast<std::size_t>(tensor.c), static_cast<std::size_t>(tensor.t),
                   static_cast<std::size_t>(tensor.v)},
                  tensor.data);
    write_tensor_file(array, base + ".sktf");

    std::ofstream ch(base + ".channels");
    if (!ch) throw ConfigError("cannot write '" + base + ".channels'");
    for (const auto& name : tensor.channel_map) ch << name << '\n';

    write_labels_file(tensor.labels, base + ".labels");
}

FeatureTensor read_features(const std::string& path) {
    const std::string base = strip_sktf_suffix(path);
    SktfDtype dtype;
    NdArray array = read_tensor_file(base + ".sktf", &dtype);
    if (array.dims.size() != 5)
        throw ContainerError(ContainerErrorKind::invalid_dims,
                             "'" + base + ".sktf' is not a 5-D feature tensor");

    FeatureTensor out;
    out.n = static_cast<int>(array.dims[0]);
    out.m = static_cast<int>(array.dims[1]);
    out.c = static_cast<int>(array.dims[2]);
    out.t = static_cast<int>(array.dims[3]);
    out.v = static_cast<int>(array.dims[4]);
    out.data = std::move(array.data);

    std::ifstream ch(base + ".channels");
    if (ch) {
        std::string line;
        while (std::getline(ch, line))
            if (!line.empty()) out.channel_map.push_back(line);
    }

    std::ifstream lab(base + ".labels");
    if (lab) out.labels = read_labels_file(base + ".labels");
    return out;
}

ChannelStats channel_stats(const FeatureTensor& tensor) {
    if (tensor.c == 0 || tensor.data.empty()) throw ShapeError("channel_stats: empty tensor");
    ChannelStats stats;
    stats.mean.assign(static_cast<std::size_t>(tensor.c), 0.0);
    stats.sd.assign(static_cast<std::size_t>(tensor.c), 0.0);
    const std::size_t per_channel =
        static_cast<std::size_t>(tensor.n) * tensor.m * tensor.t * tensor.v;
    for (int c = 0; c < tensor.c; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int n = 0; n < tensor.n; ++n)
            for (int m = 0; m < tensor.m; ++m)
                for (int t = 0; t < tensor.t; ++t)
                    for (int v = 0; v < tensor.v; ++v) {
                        const double x = tensor.at(n, m, c, t, v);
                        sum += x;
                        sq += x * x;
                    }
        const double mean = sum / per_channel;
        stats.mean[c] = mean;
        stats.sd[c] = std::sqrt(std::max(sq / per_channel - mean * mean, 1e-24));
    }
    return stats;
}

void standardize(FeatureTensor& tensor, const ChannelStats& stats) {
    if (stats.mean.size() != static_cast<std::size_t>(tensor.c) ||
        stats.sd.size() != static_cast<std::size_t>(tensor.c))
        throw ShapeError("standardize: stats channel count does not match tensor");
    for (int n = 0; n < tensor.n; ++n)
        for (int m = 0; m < tensor.m; ++m)
            for (int c = 0; c < tensor.c; ++c) {
                const double mu = stats.mean[c];
                const double inv = 1.0 / stats.sd[c];
                for (int t = 0; t < tensor.t; ++t)
                    for (int v = 0; v < tensor.v; ++v) {
                        double& x = tensor.data[tensor.index(n, m, c, t, v)];
                        x = (x - mu) * inv;
                    }
            }
}

} // namespace sphand

