#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphand/classifier.hpp"
#include "sphand/config.hpp"
#include "sphand/errors.hpp"
#include "sphand/features.hpp"
#include "sphand/geometry.hpp"
#include "sphand/harmonics.hpp"
#include "sphand/manifest.hpp"
#include "sphand/skeleton_io.hpp"
#include "sphand/synth.hpp"

namespace fs = std::filesystem;
using namespace sphand;

namespace {

// All commands exit 0 on success, 1 when the work itself fails (bad input
// file, failed property, diverged training), 2 on usage errors.
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct GlobalOpts {
    bool deterministic = false;
    std::string manifest_path; // empty -> derived from the command
};

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void report(const std::string& key, const std::string& value) {
    std::cout << key << "=" << value << "\n";
}

void report(const std::string& key, double value) { report(key, fmt(value)); }
void report(const std::string& key, long long value) { report(key, std::to_string(value)); }

class ManifestScope {
public:
    ManifestScope(const GlobalOpts& opts, const std::string& command)
        : opts_(opts), start_(std::chrono::steady_clock::now()) {
        manifest_.command = command;
        if (opts.deterministic) manifest_.config["deterministic"] = "1";
    }

    RunManifest& manifest() { return manifest_; }

    void set(const std::string& key, const std::string& value) { manifest_.config[key] = value; }
    void set(const std::string& key, double value) { manifest_.config[key] = fmt(value); }
    void set(const std::string& key, long long value) {
        manifest_.config[key] = std::to_string(value);
    }

    // Written once the command's work is done (including failed property
    // checks, which are results, not crashes).
    void commit() {
        const auto end = std::chrono::steady_clock::now();
        manifest_.duration_seconds = std::chrono::duration<double>(end - start_).count();
        std::string path = opts_.manifest_path;
        if (path.empty()) {
            path = manifest_.outputs.empty() ? manifest_.command + ".manifest"
                                             : manifest_.outputs.front() + ".manifest";
        }
        manifest_.write_file(path);
    }

private:
    const GlobalOpts& opts_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

std::string strip_sktf(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".sktf")
        return path.substr(0, path.size() - 5);
    return path;
}

// Stacked dataset tensor plus its label sidecar, if one sits next to it.
std::vector<SkeletonSequence> read_dataset(const std::string& path) {
    std::vector<SkeletonSequence> seqs = tensor_to_sequences(read_tensor_file(path));
    const std::string labels_path = strip_sktf(path) + ".labels";
    if (fs::exists(labels_path)) {
        const std::vector<int> labels = read_labels_file(labels_path);
        if (labels.size() != seqs.size())
            throw ConfigError("label sidecar '" + labels_path + "' has " +
                              std::to_string(labels.size()) + " entries for " +
                              std::to_string(seqs.size()) + " sequences");
        for (std::size_t i = 0; i < seqs.size(); ++i)
            if (labels[i] >= 0) seqs[i].label = labels[i];
    }
    return seqs;
}

std::vector<int> read_int_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<int> out;
    std::string token;
    while (in >> token) {
        // Allow comma-separated lists too.
        std::stringstream ss(token);
        std::string piece;
        while (std::getline(ss, piece, ',')) {
            if (piece.empty()) continue;
            try {
                out.push_back(std::stoi(piece));
            } catch (const std::exception&) {
                throw ConfigError("'" + path + "': bad integer '" + piece + "'");
            }
        }
    }
    return out;
}

std::vector<double> parse_weights(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        if (piece.empty()) continue;
        try {
            out.push_back(std::stod(piece));
        } catch (const std::exception&) {
            throw ConfigError("bad weight '" + piece + "'");
        }
    }
    return out;
}

const std::string kStatsFile = "feature_stats.sktf";

void save_stats(const ChannelStats& stats, const std::string& dir) {
    NdArray array({2, stats.mean.size()}, std::vector<double>(2 * stats.mean.size()));
    for (std::size_t c = 0; c < stats.mean.size(); ++c) {
        array.data[c] = stats.mean[c];
        array.data[stats.mean.size() + c] = stats.sd[c];
    }
    write_tensor_file(array, (fs::path(dir) / kStatsFile).string());
}

std::optional<ChannelStats> load_stats(const std::string& dir) {
    const std::string path = (fs::path(dir) / kStatsFile).string();
    if (!fs::exists(path)) return std::nullopt;
    NdArray array = read_tensor_file(path);
    if (array.dims.size() != 2 || array.dims[0] != 2)
        throw ContainerError(ContainerErrorKind::invalid_dims,
                             "'" + path + "' is not a 2 x C stats tensor");
    ChannelStats stats;
    const std::size_t c = array.dims[1];
    stats.mean.assign(array.data.begin(), array.data.begin() + c);
    stats.sd.assign(array.data.begin() + c, array.data.end());
    return stats;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_parse(const GlobalOpts& g, const std::string& format, const std::string& in_path,
              const std::string& out_path, double coord_scale) {
    ManifestScope scope(g, "parse");
    scope.set("format", format);
    scope.set("coord_scale", coord_scale);
    scope.manifest().inputs.push_back(in_path);
    scope.manifest().outputs.push_back(out_path);

    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + in_path + "'");

    SkeletonSequence seq;
    if (format == "fpha") {
        seq = parse_fpha(in);
    } else if (format == "ntu") {
        seq = parse_ntu(in);
        apply_ntu_filename_metadata(fs::path(in_path).filename().string(), seq);
    } else {
        throw ConfigError("unknown parse format '" + format + "'");
    }
    if (coord_scale != 1.0)
        for (double& x : seq.coords) x *= coord_scale;

    write_tensor_file(sequence_to_tensor(seq), out_path);
    if (seq.label) write_labels_file({*seq.label}, strip_sktf(out_path) + ".labels");

    report("format", format);
    report("frames", static_cast<long long>(seq.frames));
    report("bodies", static_cast<long long>(seq.bodies));
    report("joints", static_cast<long long>(seq.joints));
    if (seq.label) report("label", static_cast<long long>(*seq.label));
    if (seq.subject_id) report("subject", static_cast<long long>(*seq.subject_id));
    scope.commit();
    return kOk;
}

int run_embed(const GlobalOpts& g, const EmbedConfig& cfg, const std::string& hand_set_file,
              const std::string& in_path, const std::string& out_path) {
    ManifestScope scope(g, "embed");
    EmbedConfig resolved = cfg;
    if (!hand_set_file.empty()) resolved.hand_set = load_hand_set_file(hand_set_file);

    scope.set("mode", embed_mode_to_string(resolved.mode));
    scope.set("format", complex_format_to_string(resolved.format));
    {
        std::ostringstream ds, hs;
        for (std::size_t i = 0; i < resolved.degrees.size(); ++i)
            ds << (i ? "," : "") << resolved.degrees[i];
        for (std::size_t i = 0; i < resolved.hand_set.size(); ++i)
            hs << (i ? "," : "") << resolved.hand_set[i];
        scope.set("degrees", ds.str());
        scope.set("hand_set", hs.str().empty() ? "all" : hs.str());
    }
    scope.set("up_axis", std::string(1, "xyz"[static_cast<int>(resolved.up_axis)]));
    scope.set("target_frames", static_cast<long long>(resolved.target_frames));
    scope.set("modality", modality_to_string(resolved.modality));
    scope.set("coord_scale", resolved.coord_scale);
    scope.set("lsht_normalize", resolved.lsht_normalize ? "1" : "0");
    scope.set("seed", static_cast<long long>(resolved.seed));
    scope.manifest().seed = resolved.seed;
    scope.manifest().inputs.push_back(in_path);
    scope.manifest().outputs.push_back(out_path);

    const std::vector<SkeletonSequence> seqs = read_dataset(in_path);
    std::mt19937_64 rng(resolved.seed);
    const FeatureTensor ft = assemble(seqs, resolved, rng);
    write_features(ft, out_path);

    report("sequences", static_cast<long long>(ft.n));
    report("bodies", static_cast<long long>(ft.m));
    report("channels", static_cast<long long>(ft.c));
    report("frames", static_cast<long long>(ft.t));
    report("joints", static_cast<long long>(ft.v));
    report("mode", embed_mode_to_string(resolved.mode));
    scope.commit();
    return kOk;
}

int run_verify(const GlobalOpts& g, const std::string& property, double tol_override) {
    ManifestScope scope(g, "verify");
    double deviation = 0.0;
    double tol = tol_override;
    if (property == "orthonormality") {
        if (tol <= 0.0) tol = 1e-9;
        deviation = verify_orthonormality();
    } else if (property == "azimuthal") {
        if (tol <= 0.0) tol = 1e-12;
        deviation = verify_azimuthal_invariance();
    } else if (property == "so3-spectrum" || property == "so3_spectrum") {
        if (tol <= 0.0) tol = 1e-8;
        deviation = verify_so3_spectrum();
    } else {
        throw ConfigError("unknown property '" + property + "'");
    }
    const bool pass = deviation < tol;

    scope.set("property", property);
    scope.set("tolerance", tol);
    report("property", property);
    report("deviation", deviation);
    report("tolerance", tol);
    report("status", pass ? "pass" : "fail");
    if (pass)
        std::cout << "max deviation < " << fmt(tol) << "\n";
    else
        std::cout << "max deviation " << fmt(deviation) << " exceeds " << fmt(tol) << "\n";
    scope.commit();
    return pass ? kOk : kFailure;
}

int run_synth(const GlobalOpts& g, const std::string& spec_file, int n_per_class,
              std::uint64_t seed, int frames_override, const std::string& pass,
              const std::string& out_path) {
    ManifestScope scope(g, "synth");
    BenchSpec spec = spec_file.empty() ? BenchSpec::defaults()
                                       : BenchSpec::from_kv(KeyValueConfig::parse_file(spec_file));
    const int frames = frames_override > 0 ? frames_override : spec.frames;

    RotationSetting rotation;
    if (pass == "train")
        rotation = spec.rotation_train;
    else if (pass == "test")
        rotation = spec.rotation_test;
    else
        rotation = rotation_setting_from_string(pass);

    if (!spec_file.empty()) scope.manifest().inputs.push_back(spec_file);
    scope.manifest().outputs.push_back(out_path);
    scope.manifest().seed = seed;
    scope.set("n_per_class", static_cast<long long>(n_per_class));
    scope.set("seed", static_cast<long long>(seed));
    scope.set("frames", static_cast<long long>(frames));
    scope.set("joints", static_cast<long long>(spec.joints));
    scope.set("rotation", rotation_setting_to_string(rotation));
    scope.set("classes", static_cast<long long>(spec.classes.size()));

    std::mt19937_64 rng(seed);
    const std::vector<SkeletonSequence> seqs = generate(spec, n_per_class, frames, rng, rotation);
    write_tensor_file(sequences_to_tensor(seqs), out_path);
    std::vector<int> labels;
    labels.reserve(seqs.size());
    for (const auto& s : seqs) labels.push_back(s.label.value_or(-1));
    write_labels_file(labels, strip_sktf(out_path) + ".labels");

    report("classes", static_cast<long long>(spec.classes.size()));
    report("per_class", static_cast<long long>(n_per_class));
    report("sequences", static_cast<long long>(seqs.size()));
    report("frames", static_cast<long long>(frames));
    report("joints", static_cast<long long>(spec.joints));
    report("rotation", rotation_setting_to_string(rotation));
    scope.commit();
    return kOk;
}

int run_train(const GlobalOpts& g, const std::string& config_file, const std::string& data_path,
              const std::string& out_dir) {
    ManifestScope scope(g, "train");
    KeyValueConfig kv =
        config_file.empty() ? KeyValueConfig() : KeyValueConfig::parse_file(config_file);

    FeatureTensor data = read_features(data_path);
    if (data.labels.empty()) throw ConfigError("'" + data_path + "' carries no labels");
    int max_label = -1;
    for (int l : data.labels) max_label = std::max(max_label, l);
    if (max_label < 0) throw ConfigError("'" + data_path + "' has no labeled samples");

    // The data fixes whatever the config leaves open.
    if (!kv.has("joints")) kv.set("joints", std::to_string(data.v));
    if (!kv.has("in_channels")) kv.set("in_channels", std::to_string(data.c));
    if (!kv.has("classes")) kv.set("classes", std::to_string(max_label + 1));
    ArchConfig arch = ArchConfig::from_kv(kv);
    TrainConfig tc = TrainConfig::from_kv(kv);
    if (g.deterministic) tc.threads = 1;
    const bool standardize_data = kv.get_bool("standardize", false);

    if (!config_file.empty()) scope.manifest().inputs.push_back(config_file);
    scope.manifest().inputs.push_back(data_path);
    scope.manifest().outputs.push_back(out_dir);
    scope.manifest().seed = tc.seed;
    for (const auto& [k, v] : kv.items()) scope.set(k, v);
    scope.set("standardize", standardize_data ? "1" : "0");

    fs::create_directories(out_dir);
    if (standardize_data) {
        const ChannelStats stats = channel_stats(data);
        standardize(data, stats);
        save_stats(stats, out_dir);
    }

    std::mt19937_64 rng(tc.seed);
    GcnModel model = init_model(arch, rng);
    report("parameters", static_cast<long long>(model.parameter_count()));
    const TrainHistory history = train(model, data, nullptr, tc);
    for (const EpochStats& e : history) {
        std::cout << "epoch=" << e.epoch << " lr=" << fmt(e.lr) << " loss=" << fmt(e.loss)
                  << " train_accuracy=" << fmt(e.train_accuracy) << "\n";
    }
    save_checkpoint(model, out_dir);

    report("epochs", static_cast<long long>(history.size()));
    if (!history.empty()) {
        report("final_loss", history.back().loss);
        report("final_train_accuracy", history.back().train_accuracy);
    }
    report("checkpoint", out_dir);
    scope.commit();
    return kOk;
}

int run_eval(const GlobalOpts& g, const std::string& ckpt_dir, const std::string& data_path,
             const std::string& hand_classes_file, const std::string& scores_path) {
    ManifestScope scope(g, "eval");
    scope.manifest().inputs.push_back(ckpt_dir);
    scope.manifest().inputs.push_back(data_path);
    if (!scores_path.empty()) scope.manifest().outputs.push_back(scores_path);
    scope.set("checkpoint", ckpt_dir);

    const GcnModel model = load_checkpoint(ckpt_dir);
    FeatureTensor data = read_features(data_path);
    if (const auto stats = load_stats(ckpt_dir)) {
        standardize(data, *stats);
        scope.set("standardize", "1");
    }

    std::optional<std::vector<int>> hand_classes;
    if (!hand_classes_file.empty()) {
        hand_classes = read_int_list_file(hand_classes_file);
        scope.set("hand_classes", hand_classes_file);
    }

    const EvalResult result =
        evaluate(model, data, hand_classes ? &*hand_classes : nullptr);
    report("samples", static_cast<long long>(result.samples));
    report("accuracy", result.accuracy);
    for (std::size_t k = 0; k < result.per_class_accuracy.size(); ++k) {
        if (result.per_class_count[k] == 0) continue;
        report("class_" + std::to_string(k) + "_accuracy", result.per_class_accuracy[k]);
    }
    if (result.hand_class_accuracy) report("hand_class_accuracy", *result.hand_class_accuracy);

    if (!scores_path.empty()) {
        const Eigen::MatrixXd logits = forward(model, data);
        NdArray array({static_cast<std::size_t>(logits.rows()),
                       static_cast<std::size_t>(logits.cols())},
                      std::vector<double>(static_cast<std::size_t>(logits.size())));
        for (Eigen::Index r = 0; r < logits.rows(); ++r)
            for (Eigen::Index c = 0; c < logits.cols(); ++c)
                array.data[static_cast<std::size_t>(r) * logits.cols() + c] = logits(r, c);
        write_tensor_file(array, scores_path);
        write_labels_file(data.labels, strip_sktf(scores_path) + ".labels");
        report("scores", scores_path);
    }
    scope.commit();
    return kOk;
}

int run_ensemble(const GlobalOpts& g, const std::vector<std::string>& score_paths,
                 const std::string& weights_arg) {
    ManifestScope scope(g, "ensemble");
    for (const auto& p : score_paths) scope.manifest().inputs.push_back(p);
    scope.set("weights", weights_arg.empty() ? "equal" : weights_arg);

    std::vector<Eigen::MatrixXd> scores;
    for (const std::string& path : score_paths) {
        NdArray array = read_tensor_file(path);
        if (array.dims.size() != 2)
            throw ContainerError(ContainerErrorKind::invalid_dims,
                                 "'" + path + "' is not an N x classes score tensor");
        Eigen::MatrixXd m(array.dims[0], array.dims[1]);
        for (std::size_t r = 0; r < array.dims[0]; ++r)
            for (std::size_t c = 0; c < array.dims[1]; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    array.data[r * array.dims[1] + c];
        scores.push_back(std::move(m));
    }
    const std::vector<int> labels = read_labels_file(strip_sktf(score_paths.front()) + ".labels");
    const std::vector<double> weights = parse_weights(weights_arg);

    const double accuracy = ensemble_accuracy(scores, weights, labels);
    report("models", static_cast<long long>(scores.size()));
    report("samples", static_cast<long long>(labels.size()));
    report("accuracy", accuracy);
    scope.commit();
    return kOk;
}

int run_gradcheck(const GlobalOpts& g, const std::string& config_file, double tol) {
    ManifestScope scope(g, "gradcheck");
    KeyValueConfig kv =
        config_file.empty() ? KeyValueConfig() : KeyValueConfig::parse_file(config_file);
    const ArchConfig arch = ArchConfig::from_kv(kv);
    const std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    if (!config_file.empty()) scope.manifest().inputs.push_back(config_file);
    scope.manifest().seed = seed;
    scope.set("tolerance", tol);

    std::mt19937_64 rng(seed);
    const GcnModel model = init_model(arch, rng);

    FeatureTensor batch = FeatureTensor::zeros(3, 1, arch.in_channels, 16, arch.joints);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : batch.data) x = gauss(rng);
    batch.labels.assign(batch.n, 0);
    for (int i = 0; i < batch.n; ++i) batch.labels[i] = i % arch.classes;

    const double err = gradient_check(model, batch);
    const bool pass = err < tol;
    report("parameters", static_cast<long long>(model.parameter_count()));
    report("max_relative_error", err);
    report("tolerance", tol);
    report("status", pass ? "pass" : "fail");
    scope.commit();
    return pass ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skeleton hand-action feature pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GlobalOpts g;
    app.add_flag("--deterministic", g.deterministic,
                 "Force single-threaded, bit-reproducible execution");
    app.add_option("--manifest", g.manifest_path, "Where to write the run manifest");

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "Parse a skeleton text file into a tensor");
    std::string parse_format, parse_in, parse_out;
    double parse_scale = 1.0;
    parse_cmd->add_option("--format", parse_format, "fpha or ntu")->required();
    parse_cmd->add_option("--coord-scale", parse_scale, "Multiply parsed coordinates");
    parse_cmd->add_option("input", parse_in, "Input text file")->required();
    parse_cmd->add_option("output", parse_out, "Output .sktf tensor")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Assemble feature tensors from a dataset");
    EmbedConfig embed_cfg;
    std::string embed_mode = "lshr", embed_format = "mag", embed_degrees = "1,2";
    std::string embed_hand_set, embed_up = "y", embed_modality = "location";
    std::string embed_in, embed_out;
    std::uint64_t embed_seed = 1;
    embed_cmd->add_option("--mode", embed_mode, "none|lshr|lsht|lshr-only|random");
    embed_cmd->add_option("--format", embed_format, "mag|real|imag|phase|real-imag|mag-phase");
    embed_cmd->add_option("--degrees", embed_degrees, "Comma-separated degree list");
    embed_cmd->add_option("--hand-set", embed_hand_set, "File listing hand joint ids");
    embed_cmd->add_option("--up-axis", embed_up, "x, y or z");
    embed_cmd->add_option("--target-frames", embed_cfg.target_frames, "Temporal resize target");
    embed_cmd->add_option("--bodies", embed_cfg.bodies, "Body count (0 keeps batch maximum)");
    embed_cmd->add_option("--modality", embed_modality, "location or velocity");
    embed_cmd->add_option("--coord-scale", embed_cfg.coord_scale, "Coordinate prescale");
    embed_cmd->add_flag("--lsht-normalize", embed_cfg.lsht_normalize,
                        "Divide transform coefficients by neighbor count");
    embed_cmd->add_option("--seed", embed_seed, "Seed for the random baseline");
    embed_cmd->add_option("input", embed_in, "Dataset .sktf")->required();
    embed_cmd->add_option("output", embed_out, "Output feature base path")->required();

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Run a numeric property check");
    std::string verify_property;
    double verify_tol = 0.0;
    verify_cmd->add_option("--property", verify_property, "orthonormality|azimuthal|so3-spectrum")
        ->required();
    verify_cmd->add_option("--tol", verify_tol, "Override the default tolerance");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled gesture dataset");
    std::string synth_spec, synth_pass = "train", synth_out;
    int synth_n = 10, synth_frames = 0;
    std::uint64_t synth_seed = 1;
    synth_cmd->add_option("--spec", synth_spec, "Key=value generator spec file");
    synth_cmd->add_option("--n", synth_n, "Samples per class")->required();
    synth_cmd->add_option("--seed", synth_seed, "Generator seed");
    synth_cmd->add_option("--frames", synth_frames,
                          "Frames per sequence (0 uses the spec file's value)");
    synth_cmd->add_option("--rotation", synth_pass,
                          "train|test (use the spec file's setting) or none|up_axis|so3");
    synth_cmd->add_option("output", synth_out, "Output dataset .sktf")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the classifier on a feature tensor");
    std::string train_config, train_data, train_out;
    train_cmd->add_option("--config", train_config, "Key=value training config");
    train_cmd->add_option("--data", train_data, "Feature tensor base path")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a feature tensor");
    std::string eval_ckpt, eval_data, eval_hand_classes, eval_scores;
    eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint directory")->required();
    eval_cmd->add_option("--data", eval_data, "Feature tensor base path")->required();
    eval_cmd->add_option("--hand-classes", eval_hand_classes, "File listing class ids");
    eval_cmd->add_option("--scores", eval_scores, "Dump logits to this .sktf for ensembling");

    // ensemble
    auto* ensemble_cmd = app.add_subcommand("ensemble", "Fuse score dumps and report accuracy");
    std::vector<std::string> ensemble_scores;
    std::string ensemble_weights;
    ensemble_cmd->add_option("scores", ensemble_scores, "Score .sktf files")->required();
    ensemble_cmd->add_option("--weights", ensemble_weights, "Comma-separated model weights");

    // gradcheck
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    std::string gradcheck_config;
    double gradcheck_tol = 1e-4;
    gradcheck_cmd->add_option("--config", gradcheck_config, "Key=value model config");
    gradcheck_cmd->add_option("--tol", gradcheck_tol, "Pass threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << std::flush;
        return kUsage;
    }

    if (g.deterministic) {
#ifdef _WIN32
        _putenv_s("SPH_HANDS_THREADS", "1");
#else
        setenv("SPH_HANDS_THREADS", "1", 1);
#endif
    }

    try {
        if (app.got_subcommand(parse_cmd))
            return run_parse(g, parse_format, parse_in, parse_out, parse_scale);
        if (app.got_subcommand(embed_cmd)) {
            embed_cfg.mode = embed_mode_from_string(embed_mode);
            embed_cfg.format = complex_format_from_string(embed_format);
            embed_cfg.up_axis = axis_from_string(embed_up);
            embed_cfg.modality = modality_from_string(embed_modality);
            embed_cfg.seed = embed_seed;
            {
                std::vector<int> degrees;
                std::stringstream ss(embed_degrees);
                std::string piece;
                while (std::getline(ss, piece, ','))
                    if (!piece.empty()) degrees.push_back(std::stoi(piece));
                embed_cfg.degrees = normalize_degrees(degrees);
            }
            return run_embed(g, embed_cfg, embed_hand_set, embed_in, embed_out);
        }
        if (app.got_subcommand(verify_cmd)) return run_verify(g, verify_property, verify_tol);
        if (app.got_subcommand(synth_cmd))
            return run_synth(g, synth_spec, synth_n, synth_seed, synth_frames, synth_pass,
                             synth_out);
        if (app.got_subcommand(train_cmd)) return run_train(g, train_config, train_data, train_out);
        if (app.got_subcommand(eval_cmd))
            return run_eval(g, eval_ckpt, eval_data, eval_hand_classes, eval_scores);
        if (app.got_subcommand(ensemble_cmd))
            return run_ensemble(g, ensemble_scores, ensemble_weights);
        if (app.got_subcommand(gradcheck_cmd))
            return run_gradcheck(g, gradcheck_config, gradcheck_tol);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kFailure;
    }
    std::cerr << "usage error: no subcommand\n" << app.help() << std::flush;
    return kUsage;
}
