#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <span>
#include <vector>

namespace sfm {

struct SoftmaxHyper {
    double learning_rate = 0.5;
    int epochs = 500;
    double l2 = 1e-4;
    std::uint64_t seed = 0;  // recorded only; training is deterministic from zero init
};

/// Multinomial logistic regression over M outputs.
struct SoftmaxModel {
    Eigen::MatrixXd weights;  // M x d
    Eigen::VectorXd bias;     // M
    double l2 = 0.0;
    std::vector<double> training_log;  // objective before each epoch's update, then the final value

    int num_outputs() const { return static_cast<int>(weights.rows()); }
    int input_dim() const { return static_cast<int>(weights.cols()); }

    nlohmann::json to_json() const;
    static SoftmaxModel from_json(const nlohmann::json& doc);
};

/// Numerically stable softmax (max-shifted).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Mean cross-entropy + (l2 / 2) ||weights||_F^2 at (weights, bias); fills the
/// gradients when non-null. Rows of X are samples.
double softmax_objective(const Eigen::MatrixXd& X, std::span<const int> labels, const Eigen::MatrixXd& weights,
                         const Eigen::VectorXd& bias, double l2, Eigen::MatrixXd* grad_w = nullptr,
                         Eigen::VectorXd* grad_b = nullptr);

/// Full-batch gradient descent from `init` (zero weights when null).
SoftmaxModel train_softmax(const Eigen::MatrixXd& X, std::span<const int> labels, int num_outputs,
                           const SoftmaxHyper& hyper, const SoftmaxModel* init = nullptr);

/// Probability vector for one input.
Eigen::VectorXd predict_sub(const SoftmaxModel& model, const Eigen::VectorXd& x);

/// n x M probabilities for the rows of X.
Eigen::MatrixXd predict_sub_batch(const SoftmaxModel& model, const Eigen::MatrixXd& X);

}  // namespace sfm
