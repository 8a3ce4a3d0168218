#include "sfm/ssc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sfm/error.hpp"
#include "sfm/parallel.hpp"

namespace sfm::ssc {

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

struct ColumnSolve {
    Eigen::VectorXd c;
    int sweeps = 0;
};

// Coordinate descent on one column using the Gram matrix. `corr` tracks
// f_i'(f_j - F c) for every i so that each coordinate step is O(1) unless the
// coefficient moves.
ColumnSolve solve_column(const Eigen::MatrixXd& G, int j, double lambda, const LassoOptions& opt) {
    const Eigen::Index n = G.rows();
    ColumnSolve out;
    out.c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd corr = G.col(j);
    auto& c = out.c;

    auto update = [&](Eigen::Index i) -> double {
        const double gii = G(i, i);
        if (i == j || gii <= 0.0) return 0.0;
        const double z = corr(i) + gii * c(i);
        const double next = soft_threshold(z, lambda) / gii;
        const double delta = next - c(i);
        if (delta != 0.0) {
            c(i) = next;
            corr.noalias() -= delta * G.col(i);
        }
        return std::abs(delta);
    };

    std::vector<Eigen::Index> active;
    while (out.sweeps < opt.max_sweeps) {
        double full_change = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) full_change = std::max(full_change, update(i));
        ++out.sweeps;
        if (full_change < opt.tol) break;

        active.clear();
        for (Eigen::Index i = 0; i < n; ++i)
            if (c(i) != 0.0) active.push_back(i);
        while (out.sweeps < opt.max_sweeps) {
            double change = 0.0;
            for (auto i : active) change = std::max(change, update(i));
            ++out.sweeps;
            if (change < opt.tol) break;
        }
    }
    return out;
}

}  // namespace

SelfRepresentation self_representation(const Eigen::MatrixXd& F, double lambda_rel, const LassoOptions& options) {
    const Eigen::Index n = F.cols();
    if (n < 2) fail(Errc::InvalidConfig, "self-representation needs at least 2 points");
    if (!(lambda_rel > 0.0 && lambda_rel <= 1.0)) fail(Errc::InvalidConfig, "lambda_rel must lie in (0, 1]");
    if (!F.allFinite()) fail(Errc::NonFinite, "self-representation input contains NaN or Inf");
    if (F.isZero(0.0)) fail(Errc::InvalidConfig, "all columns are zero");

    const Eigen::MatrixXd G = F.transpose() * F;
    SelfRepresentation rep;
    rep.lambda_rel = lambda_rel;
    rep.coef = Eigen::MatrixXd::Zero(n, n);
    rep.lambda.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<int> sweeps(static_cast<std::size_t>(n), 0);

    parallel_for(static_cast<int>(n), [&](int j) {
        double lmax = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != j) lmax = std::max(lmax, std::abs(G(i, j)));
        if (lmax == 0.0) return;
        const double lambda = lambda_rel * lmax;
        rep.lambda[static_cast<std::size_t>(j)] = lambda;
        auto solved = solve_column(G, j, lambda, options);
        rep.coef.col(j) = solved.c;
        sweeps[static_cast<std::size_t>(j)] = solved.sweeps;
    });

    for (Eigen::Index j = 0; j < n; ++j) {
        if (rep.lambda[static_cast<std::size_t>(j)] == 0.0) rep.degenerate_columns.push_back(static_cast<int>(j));
        rep.coef(j, j) = 0.0;
    }
    rep.sweeps = *std::max_element(sweeps.begin(), sweeps.end());
    rep.residual_norm = (F - F * rep.coef).norm();
    return rep;
}

double lasso_objective(const Eigen::MatrixXd& F, int column, const Eigen::VectorXd& c, double lambda) {
    return lambda * c.lpNorm<1>() + 0.5 * (F.col(column) - F * c).squaredNorm();
}

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& F) {
    Eigen::MatrixXd out = F;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double nrm = out.col(j).norm();
        if (nrm > 0.0) out.col(j) /= nrm;
    }
    return out;
}

AffinityMatrix build_affinity(const SelfRepresentation& rep, const Eigen::MatrixXd& F) {
    const Eigen::Index n = rep.coef.rows();
    AffinityMatrix out;
    const Eigen::MatrixXd absC = rep.coef.cwiseAbs();
    out.A = absC + absC.transpose();
    out.A.diagonal().setZero();

    std::vector<Eigen::Index> isolated;
    for (Eigen::Index i = 0; i < n; ++i)
        if (out.A.row(i).sum() == 0.0) isolated.push_back(i);
    if (isolated.empty() || n < 2) return out;
    if (F.cols() != n) fail(Errc::DimensionMismatch, "affinity repair needs one feature column per point");

    for (auto i : isolated) {
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = (F.col(i) - F.col(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        out.A(i, best) = std::max(out.A(i, best), kIsolatedEdgeWeight);
        out.A(best, i) = out.A(i, best);
        ++out.repaired_rows;
    }
    return out;
}

namespace {

double assign_all(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centres, std::vector<int>& labels) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centres.rows(); ++c) {
            const double d = (X.row(i) - centres.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        inertia += best_d;
    }
    return inertia;
}

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd centres(k, X.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centres.row(0) = X.row(first(rng));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (X.row(i) - centres.row(0)).squaredNorm();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = unif(rng) * total;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target < 0.0 && d2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centres.row(c) = X.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (X.row(i) - centres.row(c)).squaredNorm());
    }
    return centres;
}

// Moves the worst-fitting point of a multi-member cluster into each empty one.
void fill_empty_clusters(const Eigen::MatrixXd& X, Eigen::MatrixXd& centres, std::vector<int>& labels) {
    const int k = static_cast<int>(centres.rows());
    while (true) {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
        auto empty = std::find(sizes.begin(), sizes.end(), 0);
        if (empty == sizes.end()) return;
        Eigen::Index worst = -1;
        double worst_d = -1.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const int l = labels[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(l)] < 2) continue;
            const double d = (X.row(i) - centres.row(l)).squaredNorm();
            if (d > worst_d) {
                worst_d = d;
                worst = i;
            }
        }
        const int target = static_cast<int>(empty - sizes.begin());
        labels[static_cast<std::size_t>(worst)] = target;
        centres.row(target) = X.row(worst);
    }
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts, int max_iter) {
    const Eigen::Index n = X.rows();
    if (k < 1) fail(Errc::InvalidConfig, "k must be >= 1");
    if (k > n) fail(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);

    for (int r = 0; r < std::max(1, restarts); ++r) {
        Eigen::MatrixXd centres = plus_plus_seed(X, k, rng);
        std::fill(labels.begin(), labels.end(), -1);
        std::vector<int> prev;
        for (int it = 0; it < max_iter; ++it) {
            assign_all(X, centres, labels);
            if (labels == prev) break;
            prev = labels;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
                ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0)
                    centres.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        }
        fill_empty_clusters(X, centres, labels);
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia += (X.row(i) - centres.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centres = centres;
        }
    }
    return best;
}

std::vector<int> spectral_cluster(const AffinityMatrix& affinity, int k, std::uint64_t seed) {
    const Eigen::MatrixXd& A = affinity.A;
    const Eigen::Index n = A.rows();
    if (k < 1) fail(Errc::InvalidConfig, "k must be >= 1");
    if (k > n) fail(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
    if (k == 1) return std::vector<int>(static_cast<std::size_t>(n), 0);

    Eigen::VectorXd inv_sqrt_deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double deg = A.row(i).sum();
        inv_sqrt_deg(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    Eigen::MatrixXd lap = -(inv_sqrt_deg.asDiagonal() * A * inv_sqrt_deg.asDiagonal());
    lap.diagonal().array() += 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    if (eig.info() != Eigen::Success) fail(Errc::NonFinite, "Laplacian eigen-decomposition failed");

    Eigen::MatrixXd embed = eig.eigenvectors().leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = embed.row(i).norm();
        if (nrm > 0.0) embed.row(i) /= nrm;
    }
    return kmeans(embed, k, seed).labels;
}

std::vector<int> ssc(const Eigen::MatrixXd& F, int k, double lambda_rel, std::uint64_t seed) {
    const Eigen::Index n = F.cols();
    if (k < 1) fail(Errc::InvalidConfig, "k must be >= 1");
    if (k > n) fail(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
    if (k == 1) return std::vector<int>(static_cast<std::size_t>(n), 0);
    const Eigen::MatrixXd X = normalize_columns(F);
    const auto rep = self_representation(X, lambda_rel);
    return spectral_cluster(build_affinity(rep, X), k, seed);
}

std::vector<int> random_partition(int n, int k, std::uint64_t seed) {
    if (k < 1) fail(Errc::InvalidConfig, "k must be >= 1");
    if (k > n) fail(Errc::KTooLarge, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));

    // logp(m, u): log-probability that m uniform draws over k groups hit all of
    // a given set of u groups. Sampling point by point with these weights gives
    // the uniform distribution over surjections.
    const auto K = static_cast<std::size_t>(k);
    const double logk = std::log(static_cast<double>(k));
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> logp(static_cast<std::size_t>(n) + 1, std::vector<double>(K + 1, ninf));
    logp[0][0] = 0.0;
    auto lse = [](double a, double b) {
        if (a == -std::numeric_limits<double>::infinity()) return b;
        if (b == -std::numeric_limits<double>::infinity()) return a;
        const double m = std::max(a, b);
        return m + std::log(std::exp(a - m) + std::exp(b - m));
    };
    for (std::size_t m = 1; m <= static_cast<std::size_t>(n); ++m) {
        for (std::size_t u = 0; u <= K; ++u) {
            double v = ninf;
            if (u < K) v = std::log(static_cast<double>(K - u)) - logk + logp[m - 1][u];
            if (u > 0) v = lse(v, std::log(static_cast<double>(u)) - logk + logp[m - 1][u - 1]);
            logp[m][u] = v;
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> covered, empty;
    for (int c = 0; c < k; ++c) empty.push_back(c);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto m = static_cast<std::size_t>(n - i);
        const auto u = empty.size();
        double p_covered = 0.0;
        if (u < K)
            p_covered = std::exp(std::log(static_cast<double>(K - u)) - logk + logp[m - 1][u] - logp[m][u]);
        if (!covered.empty() && unif(rng) < p_covered) {
            std::uniform_int_distribution<std::size_t> pick(0, covered.size() - 1);
            out[static_cast<std::size_t>(i)] = covered[pick(rng)];
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, empty.size() - 1);
            const auto at = pick(rng);
            const int g = empty[at];
            empty.erase(empty.begin() + static_cast<std::ptrdiff_t>(at));
            covered.push_back(g);
            out[static_cast<std::size_t>(i)] = g;
        }
    }
    return out;
}

}  // namespace sfm::ssc
