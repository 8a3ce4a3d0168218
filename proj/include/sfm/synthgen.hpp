#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sfm/dataset.hpp"

namespace sfm::synth {

/// Four-class layout: classes 0 and 1 are single blobs low left/right;
/// classes 2 and 3 each have two modes placed as the arms of an X above
/// them, so no single line separates class 2 from class 3. `overlap` slides
/// the lower-right class-3 mode up onto the upper-right class-2 mode
/// (1 = coincident).
struct Figure1Config {
    int n_per_class = 100;
    int dim = 2;
    double mode_separation = 3.0;
    double overlap = 0.0;
    double noise_sigma = 0.4;
    std::uint64_t seed = 0;
};

struct Figure1Data {
    LabeledDataset dataset;  // dataset.modes holds the same values as `modes`
    std::vector<int> modes;  // per-sample mode index within its class
};

Figure1Data gen_figure1(const Figure1Config& cfg);

/// Mode centres in the first two coordinates, indexed [class][mode].
std::vector<std::vector<Eigen::Vector2d>> figure1_centres(const Figure1Config& cfg);

struct SubspaceConfig {
    int ambient_dim = 10;
    std::vector<int> subspace_dims{2, 2, 2};
    int n_per_subspace = 50;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    bool normalize_rows = false;
};

struct SubspaceData {
    Eigen::MatrixXd points;             // n x ambient_dim, one row per point
    std::vector<int> truth;             // generating subspace per row
    std::vector<Eigen::MatrixXd> bases; // ambient_dim x subspace_dim, orthonormal columns
};

SubspaceData gen_subspaces(const SubspaceConfig& cfg);

struct ImbalancedConfig {
    std::vector<int> counts;
    int dim = 2;
    double centre_spread = 4.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

LabeledDataset gen_imbalanced(const ImbalancedConfig& cfg);

inline LabeledDataset gen_imbalanced(std::vector<int> counts, int dim, std::uint64_t seed) {
    return gen_imbalanced(ImbalancedConfig{std::move(counts), dim, 4.0, 1.0, seed});
}

}  // namespace sfm::synth
