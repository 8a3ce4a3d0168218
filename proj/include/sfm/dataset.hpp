#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sfm {

/// Feature matrix (one row per sample) plus dense integer class labels.
struct LabeledDataset {
    Eigen::MatrixXd features;              // n x d
    std::vector<int> labels;               // n, values in [0, L)
    std::vector<std::string> class_names;  // L
    std::vector<std::string> sample_ids;   // n
    std::vector<int> modes;                // optional generator metadata; empty or n

    int num_samples() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    int num_classes() const { return static_cast<int>(class_names.size()); }

    std::vector<int> class_counts() const;
    std::vector<int> indices_of_class(int cls) const;

    /// Rows in the given order; class names are kept.
    LabeledDataset subset(std::span<const int> rows) const;
    LabeledDataset with_features(Eigen::MatrixXd new_features) const;

    /// Throws on any broken invariant. `require_all_classes` additionally
    /// demands that every class index occurs (training sets).
    void validate(bool require_all_classes = true) const;
};

enum class DataFormat { Csv, Json };

DataFormat format_from_path(const std::filesystem::path& path);

struct LoadOptions {
    /// When set, labels are mapped onto this class order instead of first
    /// appearance; unknown labels are rejected.
    std::optional<std::vector<std::string>> class_names;
    bool require_all_classes = true;
};

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const LoadOptions& options = {});
LabeledDataset load_dataset(const std::filesystem::path& path);

LabeledDataset parse_dataset_csv(std::string_view text, const LoadOptions& options = {});
LabeledDataset parse_dataset_json(std::string_view text, const LoadOptions& options = {});

std::string dataset_to_csv(const LabeledDataset& ds);
std::string dataset_to_json(const LabeledDataset& ds);
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path, DataFormat format);

struct SplitSpec {
    double test_fraction = 0.25;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

/// Sorted train/test row indices. Stratified splits take
/// round(test_fraction * n_i) test rows from every class, clamped to [1, n_i - 1].
SplitIndices split_indices(const LabeledDataset& ds, const SplitSpec& spec);
std::pair<LabeledDataset, LabeledDataset> split_stratified(const LabeledDataset& ds,
                                                           const SplitSpec& spec);

}  // namespace sfm
