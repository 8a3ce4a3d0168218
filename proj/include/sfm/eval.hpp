#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfm/dataset.hpp"
#include "sfm/sfm_model.hpp"
#include "sfm/synthgen.hpp"

namespace sfm::eval {

struct AccuracyMetrics {
    double accuracy = 0.0;
    std::vector<double> per_class;  // diagonal / row sum; 0 for empty rows
    std::vector<int> empty_rows;    // classes absent from the truth
    Eigen::MatrixXi confusion;      // truth x prediction
};

AccuracyMetrics accuracy_metrics(std::span<const int> preds, std::span<const int> truth, int num_classes);

struct ApResult {
    double map = 0.0;
    std::vector<double> per_class_ap;  // NaN for classes without positives
    std::vector<int> excluded;         // classes without positives
};

/// Average precision of one ranking: scores descending, ties by index.
double average_precision(std::span<const double> scores, std::span<const bool> positive);

/// One-vs-rest AP per class from an n x L score matrix; mAP averages the
/// classes that have at least one positive.
ApResult mean_average_precision(const Eigen::MatrixXd& scores, std::span<const int> truth);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    Eigen::MatrixXi confusion;
    double map_score = 0.0;
    std::vector<double> per_class_ap;
    std::vector<int> excluded_classes;
    int n_test = 0;

    nlohmann::json to_json() const;
    std::string to_text(const std::vector<std::string>& class_names) const;
};

EvalReport evaluate(const SfmModel& model, const LabeledDataset& test);
EvalReport make_report(std::span<const int> preds, const Eigen::MatrixXd& scores, std::span<const int> truth,
                       int num_classes);

struct GeneratorConfig {
    enum class Kind { Figure1, Imbalanced, File };
    Kind kind = Kind::Figure1;
    synth::Figure1Config figure1;
    synth::ImbalancedConfig imbalanced;
    std::string path;  // File: the same dataset is re-split for every seed
};

struct ComparisonRecord {
    std::uint64_t seed = 0;
    std::uint64_t split_hash = 0;
    std::vector<int> K;
    double baseline_acc = 0.0;
    double sfm_acc = 0.0;
    double random_sfm_acc = 0.0;
    double baseline_map = 0.0;
    double sfm_map = 0.0;
    double random_sfm_map = 0.0;
};

struct ArmSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonRecord> records;
    std::vector<std::uint64_t> seeds;
    nlohmann::json config;

    ArmSummary summarize(double ComparisonRecord::*field) const;
    nlohmann::json to_json() const;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Per seed: generate (or load), split, then train the K-all-ones baseline,
/// the configured SFM, and a random-grouping SFM with the SFM's K, all on the
/// same split; evaluate each on the same test rows.
ComparisonReport compare_experiment(const GeneratorConfig& generator, const SfmConfig& pipeline,
                                    std::span<const std::uint64_t> seeds, double test_fraction = 0.25);

}  // namespace sfm::eval
