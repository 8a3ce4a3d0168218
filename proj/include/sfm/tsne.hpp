#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sfm::tsne {

struct TsneOptions {
    double perplexity = 30.0;
    int iters = 1000;
    std::uint64_t seed = 0;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    int momentum_switch_iter = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    double init_sigma = 1e-4;
    int kl_every = 10;
    double entropy_tol = 1e-5;
};

struct KlRecord {
    int iteration = 0;  // KL of Y after this many updates
    double kl = 0.0;
};

struct EmbeddingResult {
    Eigen::MatrixXd Y;  // n x 2
    double perplexity = 0.0;  // after clipping
    std::vector<KlRecord> kl_history;
    std::uint64_t seed = 0;

    double kl_first() const { return kl_history.front().kl; }
    double kl_final() const { return kl_history.back().kl; }
    /// KL recorded at the last early-exaggeration update (or the first record).
    double kl_at(int iteration) const;
};

/// Row-conditional Gaussian affinities with per-point precision found by
/// bisection on the entropy.
struct ConditionalAffinities {
    Eigen::MatrixXd P;        // n x n, rows sum to 1, zero diagonal
    Eigen::VectorXd beta;     // 1 / (2 sigma_i^2)
    Eigen::VectorXd entropy;  // nats
};

/// Clips to [2, (n - 1) / 3]; throws TooFewSamples for n < 5 and
/// PerplexityInfeasible when the upper bound is below 2.
double clip_perplexity(double perplexity, int n);

ConditionalAffinities conditional_affinities(const Eigen::MatrixXd& X, double perplexity, double tol = 1e-5);

/// (P_cond + P_cond') / (2n).
Eigen::MatrixXd joint_probabilities(const Eigen::MatrixXd& X, double perplexity, double tol = 1e-5);

/// Student-t joint distribution Q of an embedding (zero diagonal, sums to 1).
Eigen::MatrixXd student_t_joint(const Eigen::MatrixXd& Y);

/// sum_{i != j} p_ij log(p_ij / q_ij); throws InvalidDistribution on a bad P.
double kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

/// KL gradient with respect to Y written into `grad`; returns KL(P || Q).
double kl_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y, Eigen::MatrixXd& grad);

/// Exact O(n^2) t-SNE of the rows of X into two dimensions.
EmbeddingResult tsne(const Eigen::MatrixXd& X, const TsneOptions& options = {});

}  // namespace sfm::tsne
