#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfm/dataset.hpp"

namespace sfm {

/// How the samples of a class are split into its subcategories.
enum class ClusterMode { SscFullDim, Ssc2d, Random, Manual };

std::string to_string(ClusterMode mode);
ClusterMode cluster_mode_from_string(const std::string& name);

/// Per-class subcategory counts and the resulting fine-grained labelling.
/// Subcategories of class i occupy a contiguous index range.
struct SubdivisionMap {
    std::vector<int> K;           // per class, >= 1
    int M = 0;                    // sum of K
    std::vector<int> sub_labels;  // per sample, in [0, M)
    std::vector<int> owner;       // per subcategory, its original class
    ClusterMode mode = ClusterMode::SscFullDim;
    std::string k_source = "manual";  // manual | ratio_rule | suggest

    /// Throws unless every structural invariant holds against `labels`.
    void validate(std::span<const int> labels) const;
    void validate_structure() const;

    /// Sub-labels only when samples are given; models store the structure alone.
    nlohmann::json to_json(bool with_samples = true) const;
    static SubdivisionMap from_json(const nlohmann::json& doc);
};

/// Identity subdivision: every class is its own subcategory.
SubdivisionMap identity_subdivision(std::span<const int> labels, int num_classes);

/// L x M 0/1 matrix, W(i, k) = 1 iff subcategory k belongs to class i.
struct FusionMatrix {
    Eigen::MatrixXd W;

    int num_classes() const { return static_cast<int>(W.rows()); }
    int num_subcategories() const { return static_cast<int>(W.cols()); }
};

FusionMatrix build_fusion_matrix(const SubdivisionMap& map);

/// Banker's rounding (ties to even).
double round_half_to_even(double x);

/// K_i = max(1, round_half_to_even(counts_i / t)); t defaults to min(counts).
std::vector<int> ratio_rule_k(std::span<const int> counts, std::optional<double> t = std::nullopt);

struct SubdivideOptions {
    ClusterMode mode = ClusterMode::SscFullDim;
    double lambda_rel = 0.1;
    std::uint64_t seed = 0;
    int min_sub_size = 2;
    /// n x 2 coordinates aligned with the dataset rows; required for Ssc2d.
    std::optional<Eigen::MatrixXd> embedding;
    /// Per-sample within-class cluster index; required for Manual.
    std::vector<int> manual_assignments;
};

SubdivisionMap subdivide(const LabeledDataset& ds, std::span<const int> K, const SubdivideOptions& options);

/// Mean silhouette of a labelling of the rows of X. Singletons score 0.
/// Returns NaN when fewer than two clusters are present.
double silhouette(const Eigen::MatrixXd& X, std::span<const int> labels);

inline constexpr double kSuggestSilhouetteFloor = 0.25;

/// Heuristic K per class from 2-D coordinates: the k in [2, k_max] with the
/// best silhouette of its SSC labelling, or 1 when that silhouette is weak.
std::vector<int> suggest_k(const Eigen::MatrixXd& embedding, const LabeledDataset& ds, int k_max,
                           std::uint64_t seed = 0, double lambda_rel = 0.1);

/// Deterministic per-task seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace sfm
