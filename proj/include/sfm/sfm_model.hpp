#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sfm/dataset.hpp"
#include "sfm/extractor.hpp"
#include "sfm/softmax.hpp"
#include "sfm/subdivision.hpp"
#include "sfm/tsne.hpp"

namespace sfm {

/// Subcategory probabilities V, fused class scores O = W V, and the label R.
struct FusedPrediction {
    Eigen::VectorXd V;
    Eigen::VectorXd O;
    int R = 0;
};

/// O_i = sum_k W(i, k) V_k; R = argmax O with ties going to the lowest index.
FusedPrediction fuse_predict(const Eigen::VectorXd& V, const FusionMatrix& fusion);

/// Where the per-class subcategory counts come from.
struct KSource {
    enum class Kind { Manual, Ratio, Suggest };
    Kind kind = Kind::Manual;
    std::vector<int> K;         // Manual
    std::optional<double> t;    // Ratio; defaults to the minority count
    int k_max = 4;              // Suggest

    static KSource manual(std::vector<int> k) { return {Kind::Manual, std::move(k), std::nullopt, 4}; }
    static KSource ratio(std::optional<double> t = std::nullopt) { return {Kind::Ratio, {}, t, 4}; }
    static KSource suggest(int k_max = 4) { return {Kind::Suggest, {}, std::nullopt, k_max}; }
};

struct SfmConfig {
    ExtractorKind extractor = ExtractorKind::Standardize;
    int pca_dim = 0;
    KSource k_source = KSource::manual({});
    ClusterMode mode = ClusterMode::SscFullDim;
    double lambda_rel = 0.1;
    int min_sub_size = 2;
    SoftmaxHyper hyper;
    tsne::TsneOptions tsne;
    bool warm_start = false;
    std::uint64_t seed = 0;
};

nlohmann::json config_to_json(const SfmConfig& cfg);
SfmConfig config_from_json(const nlohmann::json& doc);

struct SfmModel {
    std::vector<std::string> class_names;
    FeatureExtractor extractor;
    SubdivisionMap map;  // structure only (sub_labels kept for the training rows)
    FusionMatrix fusion;
    SoftmaxModel classifier;
    nlohmann::json config;

    int num_classes() const { return static_cast<int>(class_names.size()); }

    nlohmann::json to_json() const;
    static SfmModel from_json(const nlohmann::json& doc);
};

/// Extra inputs that bypass pipeline stages.
struct TrainInputs {
    /// Use this labelling instead of clustering (must match the training rows).
    std::optional<SubdivisionMap> subdivision;
    /// 2-D coordinates for the training rows (skips t-SNE for ssc_2d / suggest).
    std::optional<Eigen::MatrixXd> embedding;
};

/// Fit extractor, resolve K, subdivide, retrain a fresh classifier on the
/// subcategory labels and attach the fixed fusion layer.
SfmModel train_sfm(const LabeledDataset& train, const SfmConfig& config, const TrainInputs& inputs = {});

/// Resolves K for the (already extracted) training data.
std::vector<int> resolve_k(const LabeledDataset& train, const SfmConfig& config,
                           const std::optional<Eigen::MatrixXd>& embedding);

FusedPrediction predict_sfm(const SfmModel& model, const Eigen::VectorXd& x);

struct BatchPrediction {
    Eigen::MatrixXd V;  // n x M
    Eigen::MatrixXd O;  // n x L
    std::vector<int> R;
};

BatchPrediction predict_sfm_batch(const SfmModel& model, const Eigen::MatrixXd& X);

void save_model(const SfmModel& model, const std::filesystem::path& path);
SfmModel load_model(const std::filesystem::path& path);

}  // namespace sfm
