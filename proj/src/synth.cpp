#include "sphand/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "sphand/errors.hpp"

namespace sphand {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

RotationSetting rotation_setting_from_string(const std::string& s) {
    if (s == "none") return RotationSetting::none;
    if (s == "up_axis" || s == "about_up_axis") return RotationSetting::about_up_axis;
    if (s == "so3" || s == "so3_uniform") return RotationSetting::so3_uniform;
    throw ConfigError("unknown rotation setting '" + s + "'");
}

std::string rotation_setting_to_string(RotationSetting r) {
    switch (r) {
        case RotationSetting::none: return "none";
        case RotationSetting::about_up_axis: return "up_axis";
        default: return "so3";
    }
}

const std::vector<std::string>& known_families() {
    static const std::vector<std::string> families = {"pinch",  "spread",    "wave",
                                                      "circle", "fist_curl", "point"};
    return families;
}

std::vector<Vec3> hand_template(int joints) {
    if (joints == 8) {
        // wrist, palm hub, middle base, middle tip, index tip, ring tip,
        // thumb tip, pinky tip
        return {{0.0, -0.55, 0.0}, {0.0, 0.0, 0.0},   {0.0, 0.45, 0.02}, {0.0, 0.8, 0.05},
                {0.3, 0.7, 0.0},   {-0.3, 0.7, 0.0}, {0.55, 0.25, 0.1}, {-0.5, 0.3, -0.05}};
    }
    if (joints == 21) {
        // wrist, five knuckles, then (pip, dip, tip) per finger in
        // thumb/index/middle/ring/pinky order.
        std::vector<Vec3> t(21);
        t[0] = {0.0, 0.0, 0.0};
        const double splay[5] = {0.95, 0.30, 0.00, -0.28, -0.55}; // radians off +y
        const double reach[5] = {0.55, 1.00, 1.05, 0.98, 0.80};
        const double mcp_r = 0.40;
        const double seg_r[3] = {0.62, 0.78, 0.90};
        for (int f = 0; f < 5; ++f) {
            const double dx = std::sin(splay[f]), dy = std::cos(splay[f]);
            t[1 + f] = {mcp_r * dx * reach[f], mcp_r * dy * reach[f], 0.02 * f};
            for (int s = 0; s < 3; ++s)
                t[6 + f * 3 + s] = {seg_r[s] * dx * reach[f], seg_r[s] * dy * reach[f],
                                    0.02 * f + 0.03 * (s + 1) * (f == 0 ? 1.5 : 1.0)};
        }
        return t;
    }
    throw ConfigError("hand template exists for 8 or 21 joints, not " + std::to_string(joints));
}

BenchSpec BenchSpec::defaults() { return from_kv(KeyValueConfig()); }

namespace {

struct FamilyDefaults {
    double amplitude;
    double freq;
};

// Amplitudes are balanced so every family displaces roughly the same total
// energy; with a shared frequency the classes differ only in which joints
// move along which template-relative directions, never in timing or tempo.
// Arc families take radians, pinch and circle take length units.
const std::map<std::string, FamilyDefaults>& family_defaults() {
    static const std::map<std::string, FamilyDefaults> table = {
        {"pinch", {0.50, 1.0}},  {"spread", {0.50, 1.0}},    {"wave", {0.50, 1.0}},
        {"circle", {0.27, 1.0}}, {"fist_curl", {0.50, 1.0}}, {"point", {0.50, 1.0}},
    };
    return table;
}

std::vector<std::string> parse_family_list(const std::string& text) {
    std::string normalized = text;
    for (char& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream is(normalized);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

} // namespace

BenchSpec BenchSpec::from_kv(const KeyValueConfig& kv) {
    BenchSpec spec;
    spec.joints = static_cast<int>(kv.get_int("joints", spec.joints));
    spec.up_axis = axis_from_string(kv.get_string("up_axis", "y"));
    spec.frames = static_cast<int>(kv.get_int("frames", spec.frames));
    spec.orient_spin = kv.get_double("orient_spin", spec.orient_spin);
    spec.orient_tilt = kv.get_double("orient_tilt", spec.orient_tilt);
    spec.place_shift = kv.get_double("place_shift", spec.place_shift);
    spec.place_scale = kv.get_double("place_scale", spec.place_scale);
    spec.rotation_train =
        rotation_setting_from_string(kv.get_string("rotation_train", "none"));
    spec.rotation_test = rotation_setting_from_string(kv.get_string("rotation_test", "so3"));
    if (spec.joints != 8 && spec.joints != 21)
        throw ConfigError("synth joints must be 8 or 21");
    if (spec.frames < 2) throw ConfigError("synth frames must be >= 2");
    if (spec.orient_spin < 0.0 || spec.orient_tilt < 0.0)
        throw ConfigError("orientation jitter ranges must be >= 0");
    if (spec.place_shift < 0.0 || spec.place_scale < 0.0 || spec.place_scale >= 1.0)
        throw ConfigError("placement jitter needs shift >= 0 and scale in [0, 1)");

    std::vector<std::string> families = known_families();
    if (kv.has("classes")) families = parse_family_list(*kv.get("classes"));
    if (families.empty()) throw ConfigError("synth classes must not be empty");

    for (std::size_t i = 0; i < families.size(); ++i) {
        const std::string& fam = families[i];
        const auto it = family_defaults().find(fam);
        if (it == family_defaults().end())
            throw ConfigError("unknown gesture family '" + fam + "'");
        GestureSpec g;
        g.class_id = static_cast<int>(i);
        g.family = fam;
        g.amplitude = kv.get_double("amplitude_" + fam,
                                    kv.get_double("amplitude", it->second.amplitude));
        g.freq = kv.get_double("freq_" + fam, kv.get_double("freq", it->second.freq));
        g.amp_jitter = kv.get_double("amp_jitter_" + fam, kv.get_double("amp_jitter", 0.5));
        g.freq_jitter = kv.get_double("freq_jitter_" + fam, kv.get_double("freq_jitter", 0.3));
        g.phase_jitter =
            kv.get_double("phase_jitter_" + fam, kv.get_double("phase_jitter", kTwoPi));
        g.noise_sigma =
            kv.get_double("noise_sigma_" + fam, kv.get_double("noise_sigma", 0.01));
        if (g.amplitude < 0.0 || g.freq <= 0.0 || g.amp_jitter < 0.0 || g.freq_jitter < 0.0 ||
            g.phase_jitter < 0.0 || g.noise_sigma < 0.0)
            throw ConfigError("gesture '" + fam + "' has a negative parameter");
        spec.classes.push_back(g);
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Trajectory families
// ---------------------------------------------------------------------------

namespace {

struct JointRoles {
    int wrist = 0;
    Vec3 hub;                       // curl target
    Vec3 normal{0.0, 0.0, 1.0};    // palm normal in template coordinates
    std::vector<int> thumb;         // base..tip
    std::vector<int> index;         // base..tip
    std::vector<std::vector<int>> other_digits; // base..tip chains
    std::vector<int> movable;       // everything but the wrist
};

JointRoles roles_for(int joints, const std::vector<Vec3>& base) {
    JointRoles r;
    if (joints == 8) {
        r.hub = base[1];
        r.thumb = {6};
        r.index = {4};
        r.other_digits = {{2, 3}, {5}, {7}};
        r.movable = {1, 2, 3, 4, 5, 6, 7};
    } else {
        Vec3 hub{0.0, 0.0, 0.0};
        for (int f = 0; f < 5; ++f) hub = hub + base[1 + f];
        r.hub = hub * (1.0 / 5.0);
        r.thumb = {1, 6, 7, 8};
        r.index = {2, 9, 10, 11};
        r.other_digits = {{3, 12, 13, 14}, {4, 15, 16, 17}, {5, 18, 19, 20}};
        r.movable.resize(20);
        for (int i = 0; i < 20; ++i) r.movable[i] = i + 1;
    }
    return r;
}

// Weight grows toward the fingertip along a digit chain.
double chain_weight(const std::vector<int>& chain, int pos) {
    return static_cast<double>(pos + 1) / static_cast<double>(chain.size());
}

void add_toward(std::vector<Vec3>& pose, const std::vector<Vec3>& base,
                const std::vector<int>& chain, const Vec3& target, double step) {
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const int j = chain[i];
        const Vec3 dir = (target - base[j]).normalized();
        pose[j] = pose[j] + dir * (step * chain_weight(chain, static_cast<int>(i)));
    }
}

// Sweep a digit chain through an arc about its knuckle hinge. Positive angles
// arch the digit toward the palm normal, negative ones curl it away; unlike a
// straight-line push this rotates every center-to-joint direction, which is
// what separates the families once lengths and tempo are equalized.
void arc_chain(std::vector<Vec3>& pose, const std::vector<Vec3>& base,
               const std::vector<int>& chain, const Vec3& pivot, const Vec3& normal,
               double angle) {
    const Vec3 dir = (base[chain.back()] - pivot).normalized();
    Vec3 hinge = normal.cross(dir);
    const double len = hinge.norm();
    if (len < 1e-12) return;
    hinge = hinge * (1.0 / len);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const int j = chain[i];
        const double a = angle * chain_weight(chain, static_cast<int>(i));
        const Rotation r = Rotation::from_quaternion(std::cos(0.5 * a),
                                                     std::sin(0.5 * a) * hinge.x,
                                                     std::sin(0.5 * a) * hinge.y,
                                                     std::sin(0.5 * a) * hinge.z);
        pose[j] = pivot + r.apply(base[j] - pivot) + (pose[j] - base[j]);
    }
}

// Every family shares the same smooth one-cycle envelope, so no class can be
// told apart by tempo, energy profile, or oscillation count; only the spatial
// pattern of the displacement field separates them. Arc amplitudes are in
// radians, translation amplitudes (pinch, circle) in template length units.
std::vector<Vec3> family_pose(const std::string& family, const std::vector<Vec3>& base,
                              const JointRoles& roles, double s, double amp, double freq,
                              double phase) {
    const double arg = kTwoPi * freq * s + phase;
    const double envelope = 0.5 - 0.5 * std::cos(arg); // smooth [0, 1]
    std::vector<Vec3> pose = base;
    const std::vector<const std::vector<int>*> digits = {
        &roles.thumb, &roles.index, &roles.other_digits[0], &roles.other_digits[1],
        &roles.other_digits[2]};

    if (family == "pinch") { // thumb and index converge, the rest curl under
        const int thumb_tip = roles.thumb.back();
        const int index_tip = roles.index.back();
        const Vec3 mid = (base[thumb_tip] + base[index_tip]) * 0.5;
        add_toward(pose, base, roles.thumb, mid, 0.5 * amp * envelope);
        add_toward(pose, base, roles.index, mid, 0.5 * amp * envelope);
        for (const auto& digit : roles.other_digits)
            arc_chain(pose, base, digit, roles.hub, roles.normal, -amp * envelope);
        return pose;
    }
    if (family == "spread") { // all digits arch away from the palm plane
        for (const auto* digit : digits)
            arc_chain(pose, base, *digit, roles.hub, roles.normal, amp * envelope);
        return pose;
    }
    if (family == "wave") { // neighboring digits arch in opposite directions
        for (std::size_t f = 0; f < digits.size(); ++f) {
            const double sign = (f % 2 == 0) ? 1.0 : -1.0;
            arc_chain(pose, base, *digits[f], roles.hub, roles.normal,
                      sign * amp * envelope);
        }
        return pose;
    }
    if (family == "circle") { // wrist-anchored loop traced by the whole hand
        const Vec3 dir = (base[roles.index.back()] - roles.hub).normalized();
        const Vec3 e1 = dir.cross(roles.normal).normalized();
        const Vec3& e2 = roles.normal;
        const Vec3 orbit = e1 * std::cos(arg) + e2 * std::sin(arg);
        double max_dist = 1e-12;
        for (int j : roles.movable)
            max_dist = std::max(max_dist, (base[j] - base[roles.wrist]).norm());
        for (int j : roles.movable) {
            const double w = (base[j] - base[roles.wrist]).norm() / max_dist;
            pose[j] = pose[j] + orbit * (amp * envelope * w);
        }
        return pose;
    }
    if (family == "fist_curl") { // all digits curl toward the palm
        for (const auto* digit : digits)
            arc_chain(pose, base, *digit, roles.hub, roles.normal, -amp * envelope);
        return pose;
    }
    if (family == "point") { // index extends while the rest curl under
        arc_chain(pose, base, roles.index, roles.hub, roles.normal, amp * envelope);
        arc_chain(pose, base, roles.thumb, roles.hub, roles.normal, -amp * envelope);
        for (const auto& digit : roles.other_digits)
            arc_chain(pose, base, digit, roles.hub, roles.normal, -amp * envelope);
        return pose;
    }
    throw ConfigError("unknown gesture family '" + family + "'");
}

Rotation orientation_jitter(std::mt19937_64& rng, const BenchSpec& spec) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double spin = u01(rng) * spec.orient_spin;
    const double tilt_dir = u01(rng) * kTwoPi;
    const double tilt = u01(rng) * spec.orient_tilt;

    // Tilt axis lies in the plane orthogonal to the up axis.
    Vec3 axis;
    switch (spec.up_axis) {
        case Axis::x: axis = {0.0, std::cos(tilt_dir), std::sin(tilt_dir)}; break;
        case Axis::y: axis = {std::cos(tilt_dir), 0.0, std::sin(tilt_dir)}; break;
        default: axis = {std::cos(tilt_dir), std::sin(tilt_dir), 0.0}; break;
    }
    const double half = 0.5 * tilt;
    const Rotation tilt_rot = Rotation::from_quaternion(
        std::cos(half), std::sin(half) * axis.x, std::sin(half) * axis.y,
        std::sin(half) * axis.z);
    return Rotation::about_axis(spec.up_axis, spin) * tilt_rot;
}

SkeletonSequence generate_one(const BenchSpec& spec, const GestureSpec& gesture, int frames,
                              std::uint64_t sample_seed, RotationSetting rotation) {
    std::mt19937_64 rng(sample_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double amp = gesture.amplitude * (1.0 + gesture.amp_jitter * (2.0 * u01(rng) - 1.0));
    const double freq = gesture.freq * (1.0 + gesture.freq_jitter * (2.0 * u01(rng) - 1.0));
    const double phase = gesture.phase_jitter > 0.0 ? u01(rng) * gesture.phase_jitter : 0.0;

    const std::vector<Vec3> base = hand_template(spec.joints);
    const JointRoles roles = roles_for(spec.joints, base);

    Rotation r = orientation_jitter(rng, spec);
    const double scale = 1.0 + spec.place_scale * (2.0 * u01(rng) - 1.0);
    Vec3 shift;
    shift.x = spec.place_shift * (2.0 * u01(rng) - 1.0);
    shift.y = spec.place_shift * (2.0 * u01(rng) - 1.0);
    shift.z = spec.place_shift * (2.0 * u01(rng) - 1.0);
    switch (rotation) {
        case RotationSetting::none: break;
        case RotationSetting::about_up_axis:
            r = sample_rotation(rng, RotationMode::about_up_axis, spec.up_axis) * r;
            break;
        case RotationSetting::so3_uniform:
            r = sample_rotation(rng, RotationMode::so3_uniform, spec.up_axis) * r;
            break;
    }

    SkeletonSequence seq = SkeletonSequence::zeros(frames, 1, spec.joints);
    seq.label = gesture.class_id;
    for (int t = 0; t < frames; ++t) {
        const double s = static_cast<double>(t) / frames;
        std::vector<Vec3> pose =
            family_pose(gesture.family, base, roles, s, amp, freq, phase);
        for (int j = 0; j < spec.joints; ++j) {
            Vec3 p = pose[j];
            p.x += gesture.noise_sigma * gauss(rng);
            p.y += gesture.noise_sigma * gauss(rng);
            p.z += gesture.noise_sigma * gauss(rng);
            const Vec3 q = r.apply(p) * scale + shift;
            double* dst = seq.at(t, 0, j);
            dst[0] = q.x;
            dst[1] = q.y;
            dst[2] = q.z;
        }
    }
    return seq;
}

} // namespace

std::vector<SkeletonSequence> generate(const BenchSpec& spec, int n_per_class, int frames,
                                       std::mt19937_64& rng, RotationSetting rotation) {
    if (spec.classes.empty()) throw ConfigError("generate: no gesture classes");
    if (n_per_class < 1) throw ConfigError("generate: n_per_class must be >= 1");
    if (frames < 2) throw ConfigError("generate: frames must be >= 2");

    std::vector<SkeletonSequence> out;
    out.reserve(static_cast<std::size_t>(n_per_class) * spec.classes.size());
    for (const GestureSpec& gesture : spec.classes)
        for (int i = 0; i < n_per_class; ++i)
            out.push_back(generate_one(spec, gesture, frames, rng(), rotation));
    return out;
}

std::pair<std::vector<SkeletonSequence>, std::vector<SkeletonSequence>> split(
    const std::vector<SkeletonSequence>& dataset, double fraction, std::mt19937_64& rng) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("split fraction must be in (0, 1)");

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!dataset[i].label)
            throw ConfigError("split: sequence " + std::to_string(i) + " carries no label");
        groups[*dataset[i].label].push_back(i);
    }

    std::vector<SkeletonSequence> train, test;
    for (auto& [label, ids] : groups) {
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::size_t take =
            static_cast<std::size_t>(fraction * static_cast<double>(ids.size()) + 0.5);
        for (std::size_t i = 0; i < ids.size(); ++i)
            (i < take ? train : test).push_back(dataset[ids[i]]);
    }
    return {std::move(train), std::move(test)};
}

} // namespace sphand
