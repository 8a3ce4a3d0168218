#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <tuple>

#include "sfm/dataset.hpp"

namespace sfm {

enum class ExtractorKind { Identity, Standardize, Pca };

std::string to_string(ExtractorKind kind);
ExtractorKind extractor_kind_from_string(const std::string& name);

/// Fixed feature transform standing in for the upstream feature model.
/// Parameters are learned from training rows only.
class FeatureExtractor {
public:
    FeatureExtractor() = default;

    static FeatureExtractor fit(const Eigen::MatrixXd& train, ExtractorKind kind, int target_dim = 0);

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd apply_one(const Eigen::VectorXd& x) const;

    ExtractorKind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }

    nlohmann::json to_json() const;
    static FeatureExtractor from_json(const nlohmann::json& doc);

private:
    ExtractorKind kind_ = ExtractorKind::Identity;
    int input_dim_ = 0;
    int output_dim_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd inv_scale_;    // standardize: 1/std, or 1 for constant columns
    Eigen::MatrixXd components_;   // pca: d x target_dim
};

std::tuple<LabeledDataset, LabeledDataset, FeatureExtractor> fit_apply_extractor(
    const LabeledDataset& train, const LabeledDataset& other, ExtractorKind kind, int target_dim = 0);

}  // namespace sfm
