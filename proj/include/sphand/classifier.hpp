#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sphand/config.hpp"
#include "sphand/features.hpp"

namespace sphand {

// Per-dataset bone list; defaults exist for 8-, 21- and 25-joint skeletons.
std::vector<std::pair<int, int>> default_edges(int joints);

// Symmetrically normalized adjacency with self-loops,
// D^{-1/2} (A + I) D^{-1/2}.
Eigen::MatrixXd normalized_adjacency(int joints, const std::vector<std::pair<int, int>>& edges);

struct ArchConfig {
    int joints = 8;
    int in_channels = 3;
    int classes = 6;
    std::vector<int> widths = {16, 16, 32, 32};
    std::vector<int> strides = {1, 1, 2, 2};
    int kernel = 5;
    std::vector<std::pair<int, int>> edges; // empty -> default_edges(joints)

    static ArchConfig from_kv(const KeyValueConfig& kv);
    void validate() const;
};

// One spatial-temporal block: X -> relu((A_base + A_offset) X W_s + b_s)
// followed by a 1-D convolution along T with kernel w_t and stride.
struct BlockParams {
    Eigen::MatrixXd a_offset;           // V x V, zero-initialized
    Eigen::MatrixXd w_s;                // C_in x C_out
    Eigen::MatrixXd b_s;                // 1 x C_out
    std::vector<Eigen::MatrixXd> w_t;   // kernel entries, C_out x C_out
    Eigen::MatrixXd b_t;                // 1 x C_out
};

struct GcnModel {
    ArchConfig arch;
    Eigen::MatrixXd a_base;             // fixed normalized adjacency
    std::vector<BlockParams> blocks;
    Eigen::MatrixXd w_head;             // C_last x classes
    Eigen::MatrixXd b_head;             // 1 x classes

    // Visits every learnable tensor in a fixed order with a stable name.
    void for_each_param(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void for_each_param(
        const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

    std::size_t parameter_count() const;
    GcnModel zeros_like() const; // same shapes, all learnables zero
};

GcnModel init_model(const ArchConfig& arch, std::mt19937_64& rng);

// Logits, one row per sample. Throws ShapeError when batch C, T, V do not
// match the model.
Eigen::MatrixXd forward(const GcnModel& model, const FeatureTensor& batch);

enum class AugmentRotation { none, about_up_axis, so3_uniform };

AugmentRotation augment_from_string(const std::string& s);
std::string augment_to_string(AugmentRotation a);

struct TrainConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0004;
    int epochs = 65;
    int warmup_epochs = 5;
    std::vector<int> decay_epochs = {35, 55};
    int batch_size = 64;
    std::uint64_t seed = 1;
    AugmentRotation augment = AugmentRotation::none; // sequence-input training only
    int threads = 0; // 0 -> SPH_HANDS_THREADS or 1

    static TrainConfig from_kv(const KeyValueConfig& kv);
    void validate() const;
    double lr_at(int epoch) const;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> val_accuracy;
};

using TrainHistory = std::vector<EpochStats>;

// SGD with momentum and weight decay over minibatches of an assembled
// feature tensor. val is optional.
TrainHistory train(GcnModel& model, const FeatureTensor& train_set, const FeatureTensor* val_set,
                   const TrainConfig& cfg);

// Same loop, but each epoch re-rotates the raw sequences per cfg.augment and
// re-embeds them, so the augmentation happens before the embedding.
TrainHistory train_on_sequences(GcnModel& model, const std::vector<SkeletonSequence>& train_seqs,
                                const EmbedConfig& embed_cfg, const FeatureTensor* val_set,
                                const TrainConfig& cfg);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<int> per_class_count;
    std::optional<double> hand_class_accuracy;
    int samples = 0;
};

EvalResult evaluate(const GcnModel& model, const FeatureTensor& test_set,
                    const std::vector<int>* hand_classes = nullptr);

// Accuracy of argmax over the weighted sum of per-model softmax scores.
// Empty weights means equal weights.
double ensemble_accuracy(const std::vector<Eigen::MatrixXd>& scores,
                         const std::vector<double>& weights, const std::vector<int>& labels);

// Max relative error between analytic and central-difference gradients over
// at least min_params randomly sampled parameters.
double gradient_check(const GcnModel& model, const FeatureTensor& batch, double eps = 1e-5,
                      int min_params = 200, std::uint64_t seed = 20230108);

// Checkpoint directory: manifest.txt plus one .sktf container per tensor.
void save_checkpoint(const GcnModel& model, const std::string& dir);
GcnModel load_checkpoint(const std::string& dir);

} // namespace sphand
