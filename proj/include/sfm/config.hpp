#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sfm/eval.hpp"
#include "sfm/sfm_model.hpp"

namespace sfm {

/// Pipeline configuration file (JSON). Every section is optional; unknown
/// keys anywhere are rejected. Seeds default to fixed constants.
///
///   {
///     "data":       {"train": "...", "test": "..."},
///     "generator":  {"kind": "figure1" | "imbalanced", "n_per_class", "dim",
///                    "mode_separation", "overlap", "noise_sigma", "counts"},
///     "k_source":   {"kind": "manual" | "ratio" | "suggest", "K", "t", "k_max"},
///     "clustering": {"mode": "ssc_full_dim" | "ssc_2d" | "random", "lambda_rel", "min_sub_size"},
///     "tsne":       {"perplexity", "iters", "seed"},
///     "classifier": {"learning_rate", "epochs", "l2", "warm_start"},
///     "extractor":  {"kind": "identity" | "standardize" | "pca", "pca_dim"},
///     "split":      {"test_fraction"},
///     "seed": 0,
///     "seeds": [0, 1, 2],
///     "output_dir": "out"
///   }
struct PipelineConfig {
    std::optional<std::string> train_path;
    std::optional<std::string> test_path;
    eval::GeneratorConfig generator;
    SfmConfig sfm;
    /// Manual K given by class name; resolved against a dataset later.
    std::vector<std::pair<std::string, int>> named_k;
    double test_fraction = 0.25;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = ".";
};

PipelineConfig parse_pipeline_config(const nlohmann::json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Parses "c0=1,c3=2" (class names or indices) or a plain list "1,1,2,2".
/// Classes not named in a key=value list default to 1.
std::vector<int> parse_k_spec(const std::string& spec, const std::vector<std::string>& class_names);

}  // namespace sfm
