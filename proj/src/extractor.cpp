#include "sfm/extractor.hpp"

#include <cmath>

#include "sfm/error.hpp"

namespace sfm {

using nlohmann::json;

std::string to_string(ExtractorKind kind) {
    switch (kind) {
        case ExtractorKind::Identity: return "identity";
        case ExtractorKind::Standardize: return "standardize";
        case ExtractorKind::Pca: return "pca";
    }
    return "identity";
}

ExtractorKind extractor_kind_from_string(const std::string& name) {
    if (name == "identity") return ExtractorKind::Identity;
    if (name == "standardize") return ExtractorKind::Standardize;
    if (name == "pca") return ExtractorKind::Pca;
    fail(Errc::InvalidConfig, "unknown extractor kind '" + name + "'");
}

FeatureExtractor FeatureExtractor::fit(const Eigen::MatrixXd& train, ExtractorKind kind, int target_dim) {
    if (train.rows() == 0 || train.cols() == 0) fail(Errc::EmptyDataset, "cannot fit extractor on empty data");
    if (!train.allFinite()) fail(Errc::NonFinite, "extractor input contains NaN or Inf");
    FeatureExtractor fx;
    fx.kind_ = kind;
    fx.input_dim_ = static_cast<int>(train.cols());
    fx.output_dim_ = fx.input_dim_;
    if (kind == ExtractorKind::Identity) return fx;

    const double n = static_cast<double>(train.rows());
    fx.mean_ = train.colwise().mean().transpose();
    const Eigen::MatrixXd centered = train.rowwise() - fx.mean_.transpose();

    if (kind == ExtractorKind::Standardize) {
        fx.inv_scale_.resize(train.cols());
        for (Eigen::Index j = 0; j < train.cols(); ++j) {
            const double var = centered.col(j).squaredNorm() / n;
            fx.inv_scale_(j) = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
        }
        return fx;
    }

    if (target_dim < 1 || target_dim > fx.input_dim_)
        fail(Errc::InvalidConfig, "pca target_dim must lie in [1, d]");
    const Eigen::MatrixXd cov = centered.transpose() * centered / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    // eigenvalues ascending; take the last target_dim columns, largest first
    fx.components_.resize(train.cols(), target_dim);
    for (int k = 0; k < target_dim; ++k) {
        Eigen::VectorXd v = eig.eigenvectors().col(train.cols() - 1 - k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        fx.components_.col(k) = v;
    }
    fx.output_dim_ = target_dim;
    return fx;
}

Eigen::MatrixXd FeatureExtractor::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != input_dim_)
        fail(Errc::DimensionMismatch, "extractor expects " + std::to_string(input_dim_) + " columns, got " +
                                          std::to_string(x.cols()));
    switch (kind_) {
        case ExtractorKind::Identity: return x;
        case ExtractorKind::Standardize:
            return (x.rowwise() - mean_.transpose()).array().rowwise() * inv_scale_.transpose().array();
        case ExtractorKind::Pca: return (x.rowwise() - mean_.transpose()) * components_;
    }
    return x;
}

Eigen::VectorXd FeatureExtractor::apply_one(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd row = x.transpose();
    return apply(row).row(0).transpose();
}

namespace {
json vec_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}
Eigen::VectorXd vec_from_json(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

json FeatureExtractor::to_json() const {
    json doc;
    doc["kind"] = to_string(kind_);
    doc["input_dim"] = input_dim_;
    doc["output_dim"] = output_dim_;
    if (kind_ != ExtractorKind::Identity) doc["mean"] = vec_to_json(mean_);
    if (kind_ == ExtractorKind::Standardize) doc["inv_scale"] = vec_to_json(inv_scale_);
    if (kind_ == ExtractorKind::Pca) {
        json cols = json::array();
        for (Eigen::Index k = 0; k < components_.cols(); ++k) cols.push_back(vec_to_json(components_.col(k)));
        doc["components"] = std::move(cols);
    }
    return doc;
}

FeatureExtractor FeatureExtractor::from_json(const json& doc) {
    FeatureExtractor fx;
    fx.kind_ = extractor_kind_from_string(doc.at("kind").get<std::string>());
    fx.input_dim_ = doc.at("input_dim").get<int>();
    fx.output_dim_ = doc.at("output_dim").get<int>();
    if (fx.kind_ != ExtractorKind::Identity) fx.mean_ = vec_from_json(doc.at("mean"));
    if (fx.kind_ == ExtractorKind::Standardize) fx.inv_scale_ = vec_from_json(doc.at("inv_scale"));
    if (fx.kind_ == ExtractorKind::Pca) {
        const auto& cols = doc.at("components");
        fx.components_.resize(fx.input_dim_, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k)
            fx.components_.col(static_cast<Eigen::Index>(k)) = vec_from_json(cols[k]);
    }
    return fx;
}

std::tuple<LabeledDataset, LabeledDataset, FeatureExtractor> fit_apply_extractor(
    const LabeledDataset& train, const LabeledDataset& other, ExtractorKind kind, int target_dim) {
    if (train.dim() != other.dim())
        fail(Errc::DimensionMismatch, "train has " + std::to_string(train.dim()) + " features, other has " +
                                          std::to_string(other.dim()));
    auto fx = FeatureExtractor::fit(train.features, kind, target_dim);
    return {train.with_features(fx.apply(train.features)), other.with_features(fx.apply(other.features)), fx};
}

}  // namespace sfm
