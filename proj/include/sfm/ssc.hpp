#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sfm::ssc {

struct LassoOptions {
    double tol = 1e-8;       // stop once a full sweep changes no coefficient by more than this
    int max_sweeps = 20000;
};

/// Sparse self-expression of each column by the others.
struct SelfRepresentation {
    Eigen::MatrixXd coef;                 // n x n, zero diagonal
    double lambda_rel = 0.1;
    std::vector<double> lambda;           // per-column lambda actually used
    double residual_norm = 0.0;           // ||F - F C||_F
    std::vector<int> degenerate_columns;  // columns with lambda_max = 0, left at zero
    int sweeps = 0;                       // largest sweep count over columns
};

/// Per column j: min_c lambda_j ||c||_1 + 1/2 ||f_j - F c||^2 with c_j = 0 and
/// lambda_j = lambda_rel * max_{i != j} |f_i' f_j|. Cyclic coordinate descent.
/// F is d x n (one column per point) and is used as given.
SelfRepresentation self_representation(const Eigen::MatrixXd& F, double lambda_rel,
                                       const LassoOptions& options = {});

/// Lasso objective of one column's representation.
double lasso_objective(const Eigen::MatrixXd& F, int column, const Eigen::VectorXd& c, double lambda);

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& F);

struct AffinityMatrix {
    Eigen::MatrixXd A;  // symmetric, nonnegative, zero diagonal
    int repaired_rows = 0;
};

inline constexpr double kIsolatedEdgeWeight = 1e-8;

/// A = |C| + |C|'. Rows left without any edge get a kIsolatedEdgeWeight link to
/// their nearest neighbour among the columns of F.
AffinityMatrix build_affinity(const SelfRepresentation& rep, const Eigen::MatrixXd& F);

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centres;  // k x dim
    double inertia = 0.0;
};

/// k-means++ seeding with `restarts` Lloyd runs; lowest inertia wins.
/// Rows of X are points. Every label in [0, k) is used in the result.
KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts = 20,
                    int max_iter = 300);

/// Normalized-Laplacian spectral clustering of an affinity matrix.
std::vector<int> spectral_cluster(const AffinityMatrix& affinity, int k, std::uint64_t seed);

inline constexpr double kDefaultLambdaRel = 0.1;

/// Full SSC on the columns of F (d x n): unit-normalize, self-represent,
/// build affinity, spectral clustering.
std::vector<int> ssc(const Eigen::MatrixXd& F, int k, double lambda_rel, std::uint64_t seed);

/// Uniform random labelling of n items into k nonempty groups.
std::vector<int> random_partition(int n, int k, std::uint64_t seed);

}  // namespace sfm::ssc
