#include "sfm/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sfm/error.hpp"
#include "sfm/parallel.hpp"

namespace sfm::tsne {

double EmbeddingResult::kl_at(int iteration) const {
    double value = kl_history.front().kl;
    for (const auto& rec : kl_history) {
        if (rec.iteration > iteration) break;
        value = rec.kl;
    }
    return value;
}

double clip_perplexity(double perplexity, int n) {
    if (n < 5) fail(Errc::TooFewSamples, "t-SNE needs at least 5 samples, got " + std::to_string(n));
    const double upper = (n - 1) / 3.0;
    if (upper < 2.0)
        fail(Errc::PerplexityInfeasible, "perplexity bound (n-1)/3 = " + std::to_string(upper) + " is below 2");
    if (!std::isfinite(perplexity)) fail(Errc::InvalidConfig, "perplexity must be finite");
    return std::clamp(perplexity, 2.0, upper);
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd D = (-2.0 * X * X.transpose()).colwise() + sq;
    D.rowwise() += sq.transpose();
    D = D.cwiseMax(0.0);
    D.diagonal().setZero();
    return D;
}

}  // namespace

ConditionalAffinities conditional_affinities(const Eigen::MatrixXd& X, double perplexity, double tol) {
    const Eigen::Index n = X.rows();
    if (!X.allFinite()) fail(Errc::NonFinite, "t-SNE input contains NaN or Inf");
    const Eigen::MatrixXd D = squared_distances(X);
    const double target = std::log(perplexity);

    ConditionalAffinities out;
    out.P = Eigen::MatrixXd::Zero(n, n);
    out.beta = Eigen::VectorXd::Ones(n);
    out.entropy = Eigen::VectorXd::Zero(n);

    parallel_for(static_cast<int>(n), [&](int i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) dmin = std::min(dmin, D(i, j));
        Eigen::VectorXd p(n);
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double H = 0.0;
        auto eval = [&](double b) {
            double sum = 0.0, weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) {
                    p(j) = 0.0;
                    continue;
                }
                const double shifted = D(i, j) - dmin;
                p(j) = std::exp(-b * shifted);
                sum += p(j);
                weighted += shifted * p(j);
            }
            p /= sum;
            return std::log(sum) + b * weighted / sum;
        };
        // Distances are shifted by the row minimum, so beta can grow large
        // without underflow; entropy is monotone decreasing in beta.
        for (int it = 0; it < 200; ++it) {
            H = eval(beta);
            const double diff = H - target;
            if (std::abs(diff) < tol) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        out.P.row(i) = p.transpose();
        out.beta(i) = beta;
        out.entropy(i) = H;
    });
    return out;
}

Eigen::MatrixXd joint_probabilities(const Eigen::MatrixXd& X, double perplexity, double tol) {
    const auto cond = conditional_affinities(X, perplexity, tol);
    const double n = static_cast<double>(X.rows());
    return (cond.P + cond.P.transpose()) / (2.0 * n);
}

Eigen::MatrixXd student_t_joint(const Eigen::MatrixXd& Y) {
    Eigen::MatrixXd num = (1.0 + squared_distances(Y).array()).inverse().matrix();
    num.diagonal().setZero();
    return num / num.sum();
}

namespace {

void check_distribution(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
    if (P.rows() != P.cols() || P.rows() != Y.rows())
        fail(Errc::InvalidDistribution, "P must be n x n matching the embedding rows");
    if (!P.allFinite() || (P.array() < 0.0).any()) fail(Errc::InvalidDistribution, "P has negative or non-finite entries");
    if (std::abs(P.sum() - 1.0) > 1e-9) fail(Errc::InvalidDistribution, "P does not sum to 1");
    if (!P.diagonal().isZero(0.0)) fail(Errc::InvalidDistribution, "P has a nonzero diagonal");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        fail(Errc::InvalidDistribution, "P is not symmetric");
}

double kl_terms(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    double kl = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j)
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            const double p = P(i, j);
            if (i == j || p <= 0.0) continue;
            kl += p * std::log(p / std::max(Q(i, j), std::numeric_limits<double>::min()));
        }
    return std::max(kl, 0.0);
}

}  // namespace

double kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
    check_distribution(P, Y);
    return kl_terms(P, student_t_joint(Y));
}

double kl_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y, Eigen::MatrixXd& grad) {
    const Eigen::Index n = Y.rows();
    Eigen::MatrixXd num = (1.0 + squared_distances(Y).array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = num.sum();
    const Eigen::MatrixXd Q = num / z;
    // dC/dy_i = 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)
    const Eigen::MatrixXd M = ((P - Q).array() * num.array()).matrix();
    const Eigen::VectorXd rows = M.rowwise().sum();
    grad.resize(n, Y.cols());
    grad = 4.0 * (rows.asDiagonal() * Y - M * Y);
    return kl_terms(P, Q);
}

EmbeddingResult tsne(const Eigen::MatrixXd& X, const TsneOptions& options) {
    const int n = static_cast<int>(X.rows());
    EmbeddingResult result;
    result.perplexity = clip_perplexity(options.perplexity, n);
    result.seed = options.seed;
    if (options.iters < 1) fail(Errc::InvalidConfig, "t-SNE needs at least one iteration");

    const Eigen::MatrixXd P = joint_probabilities(X, result.perplexity, options.entropy_tol);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> init(0.0, options.init_sigma);
    Eigen::MatrixXd Y(n, 2);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = init(rng);

    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
    Eigen::MatrixXd grad;
    const Eigen::MatrixXd P_exag = P * options.early_exaggeration;

    for (int t = 1; t <= options.iters; ++t) {
        const bool exaggerate = t <= options.exaggeration_iters;
        kl_gradient(exaggerate ? P_exag : P, Y, grad);
        const double momentum = t <= options.momentum_switch_iter ? options.initial_momentum : options.final_momentum;
        for (Eigen::Index i = 0; i < Y.size(); ++i) {
            double& g = gains.data()[i];
            const bool same_sign = (grad.data()[i] > 0.0) == (update.data()[i] > 0.0);
            g = same_sign ? g * 0.8 : g + 0.2;
            g = std::max(g, 0.01);
            update.data()[i] = momentum * update.data()[i] - options.learning_rate * g * grad.data()[i];
        }
        Y += update;
        Y.rowwise() -= Y.colwise().mean();

        if (t == 1 || t % options.kl_every == 0 || t == options.exaggeration_iters || t == options.iters) {
            result.kl_history.push_back({t, kl_terms(P, student_t_joint(Y))});
        }
    }
    if (!Y.allFinite()) fail(Errc::NonFinite, "t-SNE diverged");
    result.Y = std::move(Y);
    return result;
}

}  // namespace sfm::tsne
