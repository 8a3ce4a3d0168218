#include "sfm/softmax.hpp"

#include <cmath>
#include <string>

#include "sfm/error.hpp"

namespace sfm {

using nlohmann::json;

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double top = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

double softmax_objective(const Eigen::MatrixXd& X, std::span<const int> labels, const Eigen::MatrixXd& weights,
                         const Eigen::VectorXd& bias, double l2, Eigen::MatrixXd* grad_w, Eigen::VectorXd* grad_b) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd logits = X * weights.transpose();
    logits.rowwise() += bias.transpose();
    double loss = 0.0;
    Eigen::MatrixXd delta(n, weights.rows());  // probabilities minus one-hot
    for (Eigen::Index i = 0; i < n; ++i) {
        const double top = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp().matrix();
        const double z = e.sum();
        const int y = labels[static_cast<std::size_t>(i)];
        loss += std::log(z) - (logits(i, y) - top);
        delta.row(i) = e / z;
        delta(i, y) -= 1.0;
    }
    loss = loss / static_cast<double>(n) + 0.5 * l2 * weights.squaredNorm();
    if (grad_w) *grad_w = delta.transpose() * X / static_cast<double>(n) + l2 * weights;
    if (grad_b) *grad_b = delta.colwise().sum().transpose() / static_cast<double>(n);
    return loss;
}

SoftmaxModel train_softmax(const Eigen::MatrixXd& X, std::span<const int> labels, int num_outputs,
                           const SoftmaxHyper& hyper, const SoftmaxModel* init) {
    const Eigen::Index n = X.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) fail(Errc::LengthMismatch, "labels/rows mismatch");
    if (n == 0) fail(Errc::EmptyDataset, "no training samples");
    if (num_outputs < 1) fail(Errc::InvalidConfig, "need at least one output");
    if (!X.allFinite()) fail(Errc::NonFinite, "training features contain NaN or Inf");
    if (hyper.epochs < 0 || !(hyper.learning_rate > 0.0) || hyper.l2 < 0.0)
        fail(Errc::InvalidConfig, "invalid softmax hyperparameters");
    std::vector<int> seen(static_cast<std::size_t>(num_outputs), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_outputs) fail(Errc::InvalidConfig, "training label out of range");
        seen[static_cast<std::size_t>(y)] = 1;
    }
    for (int k = 0; k < num_outputs; ++k)
        if (!seen[static_cast<std::size_t>(k)])
            fail(Errc::EmptyClass, "output " + std::to_string(k) + " has no training samples");

    SoftmaxModel model;
    model.l2 = hyper.l2;
    if (init) {
        if (init->weights.rows() != num_outputs || init->weights.cols() != X.cols())
            fail(Errc::DimensionMismatch, "warm-start model has the wrong shape");
        model.weights = init->weights;
        model.bias = init->bias;
    } else {
        model.weights = Eigen::MatrixXd::Zero(num_outputs, X.cols());
        model.bias = Eigen::VectorXd::Zero(num_outputs);
    }

    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const double loss = softmax_objective(X, labels, model.weights, model.bias, hyper.l2, &gw, &gb);
        if (!std::isfinite(loss)) fail(Errc::NonFinite, "softmax loss became non-finite at epoch " + std::to_string(epoch));
        model.training_log.push_back(loss);
        model.weights -= hyper.learning_rate * gw;
        model.bias -= hyper.learning_rate * gb;
    }
    const double final_loss = softmax_objective(X, labels, model.weights, model.bias, hyper.l2);
    if (!std::isfinite(final_loss)) fail(Errc::NonFinite, "softmax loss became non-finite");
    model.training_log.push_back(final_loss);
    return model;
}

Eigen::VectorXd predict_sub(const SoftmaxModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.weights.cols())
        fail(Errc::DimensionMismatch, "classifier expects " + std::to_string(model.weights.cols()) + " features, got " +
                                          std::to_string(x.size()));
    return softmax(model.weights * x + model.bias);
}

Eigen::MatrixXd predict_sub_batch(const SoftmaxModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.weights.cols())
        fail(Errc::DimensionMismatch, "classifier expects " + std::to_string(model.weights.cols()) + " features, got " +
                                          std::to_string(X.cols()));
    Eigen::MatrixXd out(X.rows(), model.weights.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.row(i) = predict_sub(model, X.row(i).transpose()).transpose();
    return out;
}

json SoftmaxModel::to_json() const {
    json doc;
    json rows = json::array();
    for (Eigen::Index k = 0; k < weights.rows(); ++k) {
        std::vector<double> row(static_cast<std::size_t>(weights.cols()));
        for (Eigen::Index j = 0; j < weights.cols(); ++j) row[static_cast<std::size_t>(j)] = weights(k, j);
        rows.push_back(row);
    }
    doc["weights"] = std::move(rows);
    doc["bias"] = std::vector<double>(bias.data(), bias.data() + bias.size());
    doc["l2"] = l2;
    doc["training_log"] = training_log;
    return doc;
}

SoftmaxModel SoftmaxModel::from_json(const json& doc) {
    SoftmaxModel m;
    const auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
    const auto bias = doc.at("bias").get<std::vector<double>>();
    const std::size_t d = rows.empty() ? 0 : rows[0].size();
    if (rows.size() != bias.size()) fail(Errc::MalformedFile, "weights/bias shape mismatch");
    m.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != d) fail(Errc::MalformedFile, "ragged weight matrix");
        for (std::size_t j = 0; j < d; ++j) m.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j];
    }
    m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    m.l2 = doc.value("l2", 0.0);
    if (doc.contains("training_log")) m.training_log = doc.at("training_log").get<std::vector<double>>();
    return m;
}

}  // namespace sfm
