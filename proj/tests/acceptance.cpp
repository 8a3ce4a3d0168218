// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sfm/eval.hpp"
#include "sfm/sfm_model.hpp"
#include "sfm/softmax.hpp"
#include "sfm/ssc.hpp"
#include "sfm/subdivision.hpp"
#include "sfm/synthgen.hpp"
#include "sfm/tsne.hpp"

using namespace sfm;

namespace {

// Pinned tolerances and budgets.
constexpr double kRatioBudgetMs = 1.0;
constexpr double kFigure1MinGain = 0.10;
constexpr double kFigure1BudgetS = 60.0;
constexpr double kAblationMinWinRate = 0.90;
constexpr double kAblationMinGap = 0.05;
constexpr double kSubspaceMaxError = 0.05;
constexpr double kSubspaceBudgetS = 30.0;
constexpr double kKktTol = 1e-6;
constexpr double kGradRelTol = 1e-4;
constexpr double kKlRatio = 0.5;
constexpr double kMinSilhouette = 0.5;
constexpr double kPerplexityRelTol = 1e-4;
constexpr double kTsneBudgetS = 60.0;
constexpr double kFusionSumTol = 1e-9;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome ratio_golden() {
    const auto t0 = Clock::now();
    const auto k = ratio_rule_k(std::vector<int>{9, 29, 17});
    const double ms = seconds_since(t0) * 1e3;
    const bool ok = k == std::vector<int>{1, 3, 2} && ms < kRatioBudgetMs;
    return {ok, fmt("K=(%d,%d,%d) in %.4f ms", k[0], k[1], k[2], ms)};
}

Outcome ratio_table() {
    const std::vector<int> counts{68, 85, 40, 54, 51, 32, 64, 114, 135, 104, 24, 132};
    const auto t0 = Clock::now();
    const auto k = ratio_rule_k(counts, 30.0);
    const double ms = seconds_since(t0) * 1e3;
    const int total = std::accumulate(k.begin(), k.end(), 0);
    const int n = std::accumulate(counts.begin(), counts.end(), 0);
    const double mean = static_cast<double>(n) / total;
    const bool ok = k == std::vector<int>{2, 3, 1, 2, 2, 1, 2, 4, 4, 3, 1, 4} && total == 29 && n == 903 &&
                    std::abs(mean - 903.0 / 29.0) < 1e-12 && ms < kRatioBudgetMs;
    return {ok, fmt("sum K=%d, %d samples, mean size %.2f, %.4f ms", total, n, mean, ms)};
}

LabeledDataset subspace_dataset(std::uint64_t seed) {
    synth::SubspaceConfig cfg;
    cfg.ambient_dim = 8;
    cfg.subspace_dims = {2, 3, 2};
    cfg.n_per_subspace = 40;
    cfg.noise_sigma = 0.05;
    cfg.seed = seed;
    const auto s = synth::gen_subspaces(cfg);
    LabeledDataset ds;
    ds.features = s.points;
    ds.labels = s.truth;
    ds.class_names = {"s0", "s1", "s2"};
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) ds.sample_ids.push_back("p" + std::to_string(i));
    return ds;
}

Outcome degenerate_k() {
    std::vector<LabeledDataset> sets;
    synth::Figure1Config f;
    f.n_per_class = 60;
    sets.push_back(synth::gen_figure1(f).dataset);
    synth::ImbalancedConfig im;
    im.counts = {9, 29, 17};
    im.dim = 5;
    sets.push_back(synth::gen_imbalanced(im));
    sets.push_back(subspace_dataset(2));
    int checked = 0, agree = 0;
    for (const auto& ds : sets) {
        auto [train, test] = split_stratified(ds, SplitSpec{0.25, 0, true});
        SfmConfig cfg;
        cfg.k_source = KSource::manual(std::vector<int>(static_cast<std::size_t>(ds.num_classes()), 1));
        const auto model = train_sfm(train, cfg);
        const auto ext = FeatureExtractor::fit(train.features, cfg.extractor);
        const auto direct = train_softmax(ext.apply(train.features), train.labels, ds.num_classes(), cfg.hyper);
        const auto fused = predict_sfm_batch(model, test.features);
        const auto P = predict_sub_batch(direct, ext.apply(test.features));
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            Eigen::Index best;
            P.row(i).maxCoeff(&best);
            ++checked;
            agree += fused.R[static_cast<std::size_t>(i)] == best && fused.O.row(i) == P.row(i);
        }
    }
    return {agree == checked, fmt("%d/%d test samples identical across %zu datasets", agree, checked, sets.size())};
}

struct Figure1Run {
    eval::ComparisonReport report;
    double seconds = 0.0;
};

const Figure1Run& figure1_run() {
    static const Figure1Run run = [] {
        eval::GeneratorConfig gen;
        gen.figure1.n_per_class = 200;
        SfmConfig cfg;
        cfg.k_source = KSource::manual({1, 1, 2, 2});
        cfg.mode = ClusterMode::SscFullDim;
        std::vector<std::uint64_t> seeds(20);
        std::iota(seeds.begin(), seeds.end(), 0);
        const auto t0 = Clock::now();
        Figure1Run r;
        r.report = eval::compare_experiment(gen, cfg, seeds);
        r.seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

Outcome figure1_gain() {
    const auto& run = figure1_run();
    const double sfm = run.report.summarize(&eval::ComparisonRecord::sfm_acc).mean;
    const double base = run.report.summarize(&eval::ComparisonRecord::baseline_acc).mean;
    const bool ok = sfm - base >= kFigure1MinGain && run.seconds < kFigure1BudgetS;
    return {ok, fmt("SFM %.4f vs baseline %.4f (+%.1f points), 20 seeds in %.1f s", sfm, base, 100 * (sfm - base),
                    run.seconds)};
}

Outcome ablation() {
    const auto& rep = figure1_run().report;
    int wins = 0;
    for (const auto& r : rep.records) wins += r.sfm_acc >= r.random_sfm_acc;
    const double rate = static_cast<double>(wins) / static_cast<double>(rep.records.size());
    const double gap = rep.summarize(&eval::ComparisonRecord::sfm_acc).mean -
                       rep.summarize(&eval::ComparisonRecord::random_sfm_acc).mean;
    const bool ok = rate >= kAblationMinWinRate && gap >= kAblationMinGap;
    return {ok, fmt("SSC >= random on %d/%zu seeds, mean gap %.1f points", wins, rep.records.size(), 100 * gap)};
}

Outcome subspace_recovery() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        synth::SubspaceConfig cfg;
        cfg.ambient_dim = 10;
        cfg.subspace_dims = {2, 2, 2};
        cfg.n_per_subspace = 50;
        cfg.noise_sigma = 0.01;
        cfg.seed = seed;
        const auto s = synth::gen_subspaces(cfg);
        const auto labels = ssc::ssc(s.points.transpose(), 3, 0.1, seed);
        worst = std::max(worst, oracle::clustering_error(labels, s.truth, 3));
    }
    const double secs = seconds_since(t0);
    return {worst <= kSubspaceMaxError && secs < kSubspaceBudgetS,
            fmt("worst error %.4f over 10 seeds in %.2f s", worst, secs)};
}

Outcome lasso_kkt() {
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 20; ++p) {
        std::mt19937_64 rng(1000 + p);
        std::normal_distribution<double> g(0.0, 1.0);
        const int d = 2 + static_cast<int>(rng() % 19);
        const int n = 3 + static_cast<int>(rng() % 48);
        Eigen::MatrixXd F(d, n);
        for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = g(rng);
        F = ssc::normalize_columns(F);
        const double lam = 0.02 + 0.04 * static_cast<double>(p % 6);
        const auto rep = ssc::self_representation(F, lam);
        for (int j = 0; j < n; ++j)
            worst = std::max(worst, oracle::lasso_kkt_violation(F, j, rep.coef.col(j), rep.lambda[static_cast<std::size_t>(j)]));
    }
    return {worst <= kKktTol, fmt("max violation %.2e over 20 problems", worst)};
}

Outcome softmax_gradient() {
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 10; ++p) {
        std::mt19937_64 rng(p);
        std::normal_distribution<double> g(0.0, 1.0);
        const int n = 5 + static_cast<int>(rng() % 20), d = 1 + static_cast<int>(rng() % 6),
                  m = 2 + static_cast<int>(rng() % 4);
        Eigen::MatrixXd X(n, d), W(m, d);
        Eigen::VectorXd b(m);
        std::vector<int> y;
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = g(rng);
        for (int k = 0; k < m; ++k) b(k) = g(rng);
        for (int i = 0; i < n; ++i) y.push_back(static_cast<int>(rng() % static_cast<unsigned>(m)));
        // cross-entropy written out directly
        auto f = [&](const Eigen::MatrixXd& Wv, const Eigen::VectorXd& bv) {
            double loss = 0.0;
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd z = Wv * X.row(i).transpose() + bv;
                loss += std::log(z.array().exp().sum()) - z(y[static_cast<std::size_t>(i)]);
            }
            return loss / n + 0.5 * 1e-3 * Wv.squaredNorm();
        };
        Eigen::MatrixXd gw;
        Eigen::VectorXd gb;
        softmax_objective(X, y, W, b, 1e-3, &gw, &gb);
        const double h = 1e-6;
        auto rel = [](double a, double fd) { return std::abs(a - fd) / std::max(1e-8, std::max(std::abs(a), std::abs(fd))); };
        for (Eigen::Index i = 0; i < W.size(); ++i) {
            Eigen::MatrixXd up = W, dn = W;
            up.data()[i] += h;
            dn.data()[i] -= h;
            const double fd = (f(up, b) - f(dn, b)) / (2 * h);
            if (std::abs(fd) > 1e-6) worst = std::max(worst, rel(gw.data()[i], fd));
        }
        for (int k = 0; k < m; ++k) {
            Eigen::VectorXd up = b, dn = b;
            up(k) += h;
            dn(k) -= h;
            const double fd = (f(W, up) - f(W, dn)) / (2 * h);
            if (std::abs(fd) > 1e-6) worst = std::max(worst, rel(gb(k), fd));
        }
    }
    return {worst <= kGradRelTol, fmt("max relative error %.2e over 10 problems", worst)};
}

Outcome tsne_sanity() {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(150, 10);
    std::vector<int> truth;
    for (int i = 0; i < 150; ++i) {
        const int b = i / 50;
        for (int j = 0; j < 10; ++j) X(i, j) = g(rng) + (j == b ? 10.0 : 0.0);
        truth.push_back(b);
    }
    const auto t0 = Clock::now();
    const auto cond = tsne::conditional_affinities(X, 30.0);
    double worst_perp = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double h = 0.0;
        for (Eigen::Index j = 0; j < X.rows(); ++j)
            if (cond.P(i, j) > 0.0) h -= cond.P(i, j) * std::log(cond.P(i, j));
        worst_perp = std::max(worst_perp, std::abs(std::exp(h) - 30.0) / 30.0);
    }
    tsne::TsneOptions opts;
    opts.perplexity = 30.0;
    opts.seed = 5;
    const auto r = tsne::tsne(X, opts);
    const double secs = seconds_since(t0);
    const double sil = oracle::silhouette(r.Y, truth);
    const bool ok = r.kl_final() <= kKlRatio * r.kl_first() && sil >= kMinSilhouette &&
                    worst_perp <= kPerplexityRelTol && secs < kTsneBudgetS;
    return {ok, fmt("KL %.3f -> %.3f, silhouette %.3f, perplexity error %.1e, %.1f s", r.kl_first(), r.kl_final(), sil,
                    worst_perp, secs)};
}

Outcome fusion_properties() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> ld(1, 8), kd(1, 5);
    std::exponential_distribution<double> e(1.0);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        SubdivisionMap map;
        map.K.resize(static_cast<std::size_t>(ld(rng)));
        for (auto& k : map.K) k = kd(rng);
        for (std::size_t c = 0; c < map.K.size(); ++c)
            for (int j = 0; j < map.K[c]; ++j) map.owner.push_back(static_cast<int>(c));
        map.M = static_cast<int>(map.owner.size());
        const auto F = build_fusion_matrix(map);
        Eigen::VectorXd V(map.M);
        for (int k = 0; k < map.M; ++k) V(k) = e(rng);
        V /= V.sum();
        // every third case forces an exact tie between two classes
        if (trial % 3 == 0 && map.K.size() >= 2) {
            V.setZero();
            V(map.M - 1) = 0.5;
            V(map.K[0] - 1) = 0.5;
        }
        const auto p = fuse_predict(V, F);
        const auto again = fuse_predict(V, F);
        bool ok = (F.W.colwise().sum().array() == 1.0).all();
        ok = ok && std::abs(p.O.sum() - V.sum()) <= kFusionSumTol;
        Eigen::Index first_max = 0;
        for (Eigen::Index i = 1; i < p.O.size(); ++i)
            if (p.O(i) > p.O(first_max)) first_max = i;
        ok = ok && p.R == first_max && again.R == p.R;
        FusionMatrix identity{Eigen::MatrixXd::Identity(map.M, map.M)};
        ok = ok && fuse_predict(V, identity).O == V;
        bad += !ok;
    }
    return {bad == 0, fmt("%d/1000 cases violated a property", bad)};
}

Outcome ap_golden() {
    const std::vector<double> scores{4.0, 3.0, 2.0, 1.0};
    const bool positive[] = {true, false, true, false};
    const double ap = eval::average_precision(scores, positive);
    return {ap == 5.0 / 6.0, fmt("AP = %.17g", ap)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"ratio rule golden (9,29,17)", ratio_golden},
        {"ratio rule 12-class reconstruction", ratio_table},
        {"all-ones K equals direct softmax", degenerate_k},
        {"figure1 SFM over baseline", figure1_gain},
        {"SSC vs random grouping", ablation},
        {"SSC subspace recovery", subspace_recovery},
        {"lasso KKT conditions", lasso_kkt},
        {"softmax gradient check", softmax_gradient},
        {"t-SNE sanity", tsne_sanity},
        {"fusion properties", fusion_properties},
        {"AP golden", ap_golden},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu  %-36s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
