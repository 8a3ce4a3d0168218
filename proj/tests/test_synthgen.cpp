#include <doctest.h>

#include <set>

#include "sfm/extractor.hpp"
#include "sfm/softmax.hpp"
#include "sfm/synthgen.hpp"
#include "test_helpers.hpp"

using namespace sfm;

TEST_CASE("figure1 layout and mode metadata") {
    auto data = synth::gen_figure1({.n_per_class = 100, .seed = 7});
    const auto& ds = data.dataset;
    CHECK(ds.num_samples() == 400);
    CHECK(ds.num_classes() == 4);
    CHECK(ds.dim() == 2);
    CHECK(data.modes == ds.modes);
    for (int c = 0; c < 4; ++c) {
        std::set<int> modes;
        for (int r : ds.indices_of_class(c)) modes.insert(data.modes[static_cast<std::size_t>(r)]);
        CHECK(modes.size() == (c < 2 ? 1u : 2u));
    }
    CHECK_NOTHROW(ds.validate());
}

TEST_CASE("figure1 is deterministic and seed dependent") {
    synth::Figure1Config cfg{.n_per_class = 30, .dim = 4, .seed = 3};
    auto a = synth::gen_figure1(cfg);
    auto b = synth::gen_figure1(cfg);
    CHECK(a.dataset.features == b.dataset.features);
    CHECK(a.dataset.labels == b.dataset.labels);
    cfg.seed = 4;
    CHECK(synth::gen_figure1(cfg).dataset.features != a.dataset.features);
}

TEST_CASE("figure1 mode centroids are far apart") {
    for (double sep : {1.5, 3.0, 6.0}) {
        synth::Figure1Config cfg{.n_per_class = 200, .mode_separation = sep, .noise_sigma = 0.3, .seed = 1};
        auto data = synth::gen_figure1(cfg);
        for (int c = 2; c < 4; ++c) {
            Eigen::Vector2d mu[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
            int cnt[2] = {0, 0};
            for (int r : data.dataset.indices_of_class(c)) {
                const int m = data.modes[static_cast<std::size_t>(r)];
                mu[m] += data.dataset.features.row(r).head<2>().transpose();
                ++cnt[m];
            }
            const double dist = (mu[0] / cnt[0] - mu[1] / cnt[1]).norm();
            CHECK(dist >= sep - 4.0 * cfg.noise_sigma);
        }
    }
}

TEST_CASE("overlap 0: a linear classifier separates the modes") {
    auto data = synth::gen_figure1({.n_per_class = 100, .seed = 2});
    const auto& ds = data.dataset;
    // one label per (class, mode) pair
    std::vector<int> mode_labels;
    const int base[4] = {0, 1, 2, 4};
    for (int i = 0; i < ds.num_samples(); ++i)
        mode_labels.push_back(base[ds.labels[static_cast<std::size_t>(i)]] + data.modes[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd Z = FeatureExtractor::fit(ds.features, ExtractorKind::Standardize).apply(ds.features);
    auto model = train_softmax(Z, mode_labels, 6, {.learning_rate = 2.0, .epochs = 20000, .l2 = 0.0});
    const Eigen::MatrixXd P = predict_sub_batch(model, Z);
    int correct = 0;
    for (int i = 0; i < ds.num_samples(); ++i) {
        Eigen::Index arg = 0;
        P.row(i).maxCoeff(&arg);
        correct += static_cast<int>(arg) == mode_labels[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    CHECK(correct >= 0.99 * ds.num_samples());
}

TEST_CASE("figure1 classes 2 and 3 are not linearly separable") {
    auto ds = synth::gen_figure1({.n_per_class = 200, .seed = 5}).dataset;
    const Eigen::MatrixXd Z = FeatureExtractor::fit(ds.features, ExtractorKind::Standardize).apply(ds.features);
    auto model = train_softmax(Z, ds.labels, 4, {.learning_rate = 0.5, .epochs = 2000, .l2 = 0.0});
    const Eigen::MatrixXd P = predict_sub_batch(model, Z);
    int correct = 0;
    for (int i = 0; i < ds.num_samples(); ++i) {
        Eigen::Index arg = 0;
        P.row(i).maxCoeff(&arg);
        correct += static_cast<int>(arg) == ds.labels[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    CHECK(correct < 0.9 * ds.num_samples());
}

TEST_CASE("figure1 config errors") {
    CHECK_ERRC(synth::gen_figure1({.n_per_class = 3}), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_figure1({.dim = 1}), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_figure1({.overlap = 1.5}), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_figure1({.noise_sigma = 0.0}), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_figure1({.mode_separation = -1.0}), Errc::InvalidConfig);
}

TEST_CASE("1-D subspaces without noise are scalar multiples of the basis") {
    auto s = synth::gen_subspaces({.ambient_dim = 3, .subspace_dims = {1, 1}, .n_per_subspace = 5, .seed = 9});
    REQUIRE(s.points.rows() == 10);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd b = s.bases[static_cast<std::size_t>(s.truth[static_cast<std::size_t>(i)])].col(0);
        const Eigen::VectorXd x = s.points.row(i).transpose();
        const double a = b.dot(x);
        CHECK((x - a * b).norm() < 1e-12);
    }
}

TEST_CASE("noise-free points lie in their subspace") {
    auto s = synth::gen_subspaces({.ambient_dim = 10, .subspace_dims = {2, 3, 4}, .n_per_subspace = 20, .seed = 1});
    for (const auto& B : s.bases) CHECK((B.transpose() * B - Eigen::MatrixXd::Identity(B.cols(), B.cols())).norm() < 1e-12);
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
        const auto& B = s.bases[static_cast<std::size_t>(s.truth[static_cast<std::size_t>(i)])];
        const Eigen::VectorXd x = s.points.row(i).transpose();
        CHECK((x - B * (B.transpose() * x)).norm() < 1e-12);
    }
    auto n = synth::gen_subspaces({.ambient_dim = 5, .subspace_dims = {2}, .n_per_subspace = 8, .noise_sigma = 0.1,
                                   .seed = 1, .normalize_rows = true});
    for (Eigen::Index i = 0; i < n.points.rows(); ++i) CHECK(std::abs(n.points.row(i).norm() - 1.0) < 1e-12);
    CHECK_ERRC(synth::gen_subspaces({.ambient_dim = 3, .subspace_dims = {3}}), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_subspaces({.noise_sigma = -1.0}), Errc::InvalidConfig);
}

TEST_CASE("imbalanced counts") {
    auto ds = synth::gen_imbalanced({9, 29, 17}, 2, 0);
    CHECK(ds.class_counts() == std::vector<int>{9, 29, 17});
    CHECK(ds.num_samples() == 55);
    auto bal = synth::gen_imbalanced({5, 5}, 3, 1);
    CHECK(bal.class_counts() == std::vector<int>{5, 5});
    CHECK(bal.dim() == 3);
    CHECK_ERRC(synth::gen_imbalanced({3, 0, 2}, 2, 0), Errc::InvalidConfig);
    CHECK_ERRC(synth::gen_imbalanced({3}, 2, 0), Errc::InvalidConfig);
    CHECK(synth::gen_imbalanced({4, 6}, 2, 8).features == synth::gen_imbalanced({4, 6}, 2, 8).features);
}
