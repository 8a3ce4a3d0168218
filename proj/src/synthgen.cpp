#include "sfm/synthgen.hpp"

#include <random>
#include <string>

#include "sfm/error.hpp"

namespace sfm::synth {

namespace {

std::vector<std::string> class_names(int L) {
    std::vector<std::string> names;
    for (int c = 0; c < L; ++c) names.push_back("c" + std::to_string(c));
    return names;
}

}  // namespace

std::vector<std::vector<Eigen::Vector2d>> figure1_centres(const Figure1Config& cfg) {
    const double s = cfg.mode_separation / 3.0;
    return {
        {Eigen::Vector2d(-6.0, -3.0) * s},
        {Eigen::Vector2d(6.0, -3.0) * s},
        {Eigen::Vector2d(-2.0, 1.0) * s, Eigen::Vector2d(2.0, 5.0) * s},
        {Eigen::Vector2d(2.0, 1.0 + cfg.overlap * 4.0) * s, Eigen::Vector2d(-2.0, 5.0) * s},
    };
}

Figure1Data gen_figure1(const Figure1Config& cfg) {
    if (cfg.n_per_class < 4) fail(Errc::InvalidConfig, "n_per_class must be >= 4");
    if (cfg.dim < 2) fail(Errc::InvalidConfig, "dim must be >= 2");
    if (!(cfg.mode_separation > 0.0)) fail(Errc::InvalidConfig, "mode_separation must be positive");
    if (!(cfg.overlap >= 0.0 && cfg.overlap <= 1.0)) fail(Errc::InvalidConfig, "overlap must lie in [0, 1]");
    if (!(cfg.noise_sigma > 0.0)) fail(Errc::InvalidConfig, "noise_sigma must be positive");

    const auto centres = figure1_centres(cfg);
    const int n = 4 * cfg.n_per_class;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);

    Figure1Data out;
    auto& ds = out.dataset;
    ds.class_names = class_names(4);
    ds.features.resize(n, cfg.dim);
    int row = 0;
    for (int c = 0; c < 4; ++c) {
        const auto& modes = centres[static_cast<std::size_t>(c)];
        const int n_modes = static_cast<int>(modes.size());
        for (int i = 0; i < cfg.n_per_class; ++i) {
            // first half of the class in mode 0, remainder in mode 1
            const int m = n_modes == 1 ? 0 : (i < cfg.n_per_class / 2 ? 0 : 1);
            const auto& mu = modes[static_cast<std::size_t>(m)];
            ds.features(row, 0) = mu.x() + noise(rng);
            ds.features(row, 1) = mu.y() + noise(rng);
            for (int j = 2; j < cfg.dim; ++j) ds.features(row, j) = noise(rng);
            ds.labels.push_back(c);
            ds.sample_ids.push_back("s" + std::to_string(row));
            out.modes.push_back(m);
            ++row;
        }
    }
    ds.modes = out.modes;
    return out;
}

SubspaceData gen_subspaces(const SubspaceConfig& cfg) {
    if (cfg.ambient_dim < 1) fail(Errc::InvalidConfig, "ambient_dim must be >= 1");
    if (cfg.subspace_dims.empty()) fail(Errc::InvalidConfig, "need at least one subspace");
    if (cfg.n_per_subspace < 1) fail(Errc::InvalidConfig, "n_per_subspace must be >= 1");
    if (cfg.noise_sigma < 0.0) fail(Errc::InvalidConfig, "noise_sigma must be nonnegative");
    for (int sd : cfg.subspace_dims)
        if (sd < 1 || sd >= cfg.ambient_dim)
            fail(Errc::InvalidConfig, "each subspace dimension must lie in [1, ambient_dim)");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);

    const int k = static_cast<int>(cfg.subspace_dims.size());
    SubspaceData out;
    out.points.resize(static_cast<Eigen::Index>(k) * cfg.n_per_subspace, cfg.ambient_dim);
    int row = 0;
    for (int s = 0; s < k; ++s) {
        const int sd = cfg.subspace_dims[static_cast<std::size_t>(s)];
        Eigen::MatrixXd g(cfg.ambient_dim, sd);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(cfg.ambient_dim, sd);
        for (int i = 0; i < cfg.n_per_subspace; ++i) {
            Eigen::VectorXd a(sd);
            for (int t = 0; t < sd; ++t) a(t) = coef(rng);
            Eigen::VectorXd x = basis * a;
            if (cfg.noise_sigma > 0.0)
                for (int j = 0; j < cfg.ambient_dim; ++j) x(j) += cfg.noise_sigma * gauss(rng);
            if (cfg.normalize_rows) {
                const double nrm = x.norm();
                if (nrm > 0.0) x /= nrm;
            }
            out.points.row(row++) = x.transpose();
            out.truth.push_back(s);
        }
        out.bases.push_back(std::move(basis));
    }
    return out;
}

LabeledDataset gen_imbalanced(const ImbalancedConfig& cfg) {
    if (cfg.counts.size() < 2) fail(Errc::InvalidConfig, "need at least two class counts");
    for (int c : cfg.counts)
        if (c < 1) fail(Errc::InvalidConfig, "every class count must be >= 1");
    if (cfg.dim < 1) fail(Errc::InvalidConfig, "dim must be >= 1");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int L = static_cast<int>(cfg.counts.size());
    int n = 0;
    for (int c : cfg.counts) n += c;

    LabeledDataset ds;
    ds.class_names = class_names(L);
    ds.features.resize(n, cfg.dim);
    int row = 0;
    for (int c = 0; c < L; ++c) {
        Eigen::VectorXd centre(cfg.dim);
        for (int j = 0; j < cfg.dim; ++j) centre(j) = cfg.centre_spread * gauss(rng);
        for (int i = 0; i < cfg.counts[static_cast<std::size_t>(c)]; ++i) {
            for (int j = 0; j < cfg.dim; ++j) ds.features(row, j) = centre(j) + cfg.noise_sigma * gauss(rng);
            ds.labels.push_back(c);
            ds.sample_ids.push_back("s" + std::to_string(row));
            ++row;
        }
    }
    return ds;
}

}  // namespace sfm::synth
