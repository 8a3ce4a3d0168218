#include "sfm/sfm_model.hpp"

#include <string>

#include "sfm/error.hpp"
#include "sfm/io.hpp"

namespace sfm {

using nlohmann::json;

FusedPrediction fuse_predict(const Eigen::VectorXd& V, const FusionMatrix& fusion) {
    const auto& W = fusion.W;
    if (V.size() != W.cols())
        fail(Errc::DimensionMismatch, "fusion layer expects " + std::to_string(W.cols()) + " subcategory scores, got " +
                                          std::to_string(V.size()));
    FusedPrediction out;
    out.V = V;
    out.O = Eigen::VectorXd::Zero(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index k = 0; k < W.cols(); ++k)
            if (W(i, k) != 0.0) out.O(i) += W(i, k) * V(k);
    out.R = 0;
    for (Eigen::Index i = 1; i < out.O.size(); ++i)
        if (out.O(i) > out.O(out.R)) out.R = static_cast<int>(i);
    return out;
}

json config_to_json(const SfmConfig& cfg) {
    json doc;
    doc["extractor"] = to_string(cfg.extractor);
    if (cfg.extractor == ExtractorKind::Pca) doc["pca_dim"] = cfg.pca_dim;
    json ks;
    switch (cfg.k_source.kind) {
        case KSource::Kind::Manual:
            ks["kind"] = "manual";
            ks["K"] = cfg.k_source.K;
            break;
        case KSource::Kind::Ratio:
            ks["kind"] = "ratio";
            ks["t"] = cfg.k_source.t ? json(*cfg.k_source.t) : json(nullptr);
            break;
        case KSource::Kind::Suggest:
            ks["kind"] = "suggest";
            ks["k_max"] = cfg.k_source.k_max;
            break;
    }
    doc["k_source"] = std::move(ks);
    doc["mode"] = to_string(cfg.mode);
    doc["lambda_rel"] = cfg.lambda_rel;
    doc["min_sub_size"] = cfg.min_sub_size;
    doc["classifier"] = {{"learning_rate", cfg.hyper.learning_rate},
                         {"epochs", cfg.hyper.epochs},
                         {"l2", cfg.hyper.l2},
                         {"seed", cfg.hyper.seed}};
    doc["tsne"] = {{"perplexity", cfg.tsne.perplexity}, {"iters", cfg.tsne.iters}, {"seed", cfg.tsne.seed}};
    doc["warm_start"] = cfg.warm_start;
    doc["seed"] = cfg.seed;
    return doc;
}

SfmConfig config_from_json(const json& doc) {
    SfmConfig cfg;
    try {
        cfg.extractor = extractor_kind_from_string(doc.value("extractor", std::string("standardize")));
        cfg.pca_dim = doc.value("pca_dim", 0);
        if (doc.contains("k_source")) {
            const auto& ks = doc["k_source"];
            const auto kind = ks.value("kind", std::string("manual"));
            if (kind == "manual") cfg.k_source = KSource::manual(ks.value("K", std::vector<int>{}));
            else if (kind == "ratio")
                cfg.k_source = KSource::ratio(ks.contains("t") && !ks["t"].is_null() ? std::optional<double>(ks["t"].get<double>())
                                                                                     : std::nullopt);
            else if (kind == "suggest") cfg.k_source = KSource::suggest(ks.value("k_max", 4));
            else fail(Errc::InvalidConfig, "unknown k_source kind '" + kind + "'");
        }
        cfg.mode = cluster_mode_from_string(doc.value("mode", std::string("ssc_full_dim")));
        cfg.lambda_rel = doc.value("lambda_rel", 0.1);
        cfg.min_sub_size = doc.value("min_sub_size", 2);
        if (doc.contains("classifier")) {
            const auto& c = doc["classifier"];
            cfg.hyper.learning_rate = c.value("learning_rate", cfg.hyper.learning_rate);
            cfg.hyper.epochs = c.value("epochs", cfg.hyper.epochs);
            cfg.hyper.l2 = c.value("l2", cfg.hyper.l2);
            cfg.hyper.seed = c.value("seed", cfg.hyper.seed);
        }
        if (doc.contains("tsne")) {
            const auto& t = doc["tsne"];
            cfg.tsne.perplexity = t.value("perplexity", cfg.tsne.perplexity);
            cfg.tsne.iters = t.value("iters", cfg.tsne.iters);
            cfg.tsne.seed = t.value("seed", cfg.tsne.seed);
        }
        cfg.warm_start = doc.value("warm_start", false);
        cfg.seed = doc.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        fail(Errc::InvalidConfig, std::string("bad pipeline config: ") + e.what());
    }
    return cfg;
}

json SfmModel::to_json() const {
    json doc;
    doc["schema_version"] = 1;
    doc["class_names"] = class_names;
    doc["extractor"] = extractor.to_json();
    doc["subdivision"] = map.to_json(false);
    json W = json::array();
    for (Eigen::Index i = 0; i < fusion.W.rows(); ++i) {
        std::vector<int> row(static_cast<std::size_t>(fusion.W.cols()));
        for (Eigen::Index k = 0; k < fusion.W.cols(); ++k) row[static_cast<std::size_t>(k)] = static_cast<int>(fusion.W(i, k));
        W.push_back(row);
    }
    doc["W"] = std::move(W);
    doc["classifier"] = classifier.to_json();
    doc["config"] = config;
    return doc;
}

SfmModel SfmModel::from_json(const json& doc) {
    SfmModel m;
    try {
        m.class_names = doc.at("class_names").get<std::vector<std::string>>();
        m.extractor = FeatureExtractor::from_json(doc.at("extractor"));
        m.map = SubdivisionMap::from_json(doc.at("subdivision"));
        m.fusion = build_fusion_matrix(m.map);
        m.classifier = SoftmaxModel::from_json(doc.at("classifier"));
        m.config = doc.value("config", json::object());
        if (doc.contains("W")) {
            const auto stored = doc.at("W").get<std::vector<std::vector<int>>>();
            for (std::size_t i = 0; i < stored.size(); ++i)
                for (std::size_t k = 0; k < stored[i].size(); ++k)
                    if (static_cast<double>(stored[i][k]) !=
                        m.fusion.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))
                        fail(Errc::MalformedFile, "stored fusion matrix disagrees with the owner table");
        }
    } catch (const json::exception& e) {
        fail(Errc::MalformedFile, std::string("bad model document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() != Errc::InvalidConfig) throw;
        fail(Errc::MalformedFile, std::string("bad model document: ") + e.what());
    }
    if (m.classifier.num_outputs() != m.map.M) fail(Errc::MalformedFile, "classifier outputs do not match M");
    if (static_cast<int>(m.map.K.size()) != m.num_classes()) fail(Errc::MalformedFile, "K does not match class count");
    if (m.classifier.input_dim() != m.extractor.output_dim())
        fail(Errc::MalformedFile, "classifier input does not match extractor output");
    return m;
}

std::vector<int> resolve_k(const LabeledDataset& train, const SfmConfig& config,
                           const std::optional<Eigen::MatrixXd>& embedding) {
    const auto& ks = config.k_source;
    switch (ks.kind) {
        case KSource::Kind::Manual:
            if (static_cast<int>(ks.K.size()) != train.num_classes())
                fail(Errc::InvalidConfig, "manual K has " + std::to_string(ks.K.size()) + " entries for " +
                                              std::to_string(train.num_classes()) + " classes");
            return ks.K;
        case KSource::Kind::Ratio: {
            const auto counts = train.class_counts();
            return ratio_rule_k(counts, ks.t);
        }
        case KSource::Kind::Suggest:
            if (!embedding) fail(Errc::MissingEmbedding, "suggested K needs an embedding");
            return suggest_k(*embedding, train, ks.k_max, derive_seed(config.seed, 101), config.lambda_rel);
    }
    return ks.K;
}

SfmModel train_sfm(const LabeledDataset& train, const SfmConfig& config, const TrainInputs& inputs) {
    train.validate(true);
    if (!(config.lambda_rel > 0.0 && config.lambda_rel <= 1.0)) fail(Errc::InvalidConfig, "lambda_rel must lie in (0, 1]");
    if (config.min_sub_size < 1) fail(Errc::InvalidConfig, "min_sub_size must be >= 1");

    SfmModel model;
    model.class_names = train.class_names;
    model.extractor = FeatureExtractor::fit(train.features, config.extractor, config.pca_dim);
    const LabeledDataset ext = train.with_features(model.extractor.apply(train.features));

    std::optional<Eigen::MatrixXd> embedding = inputs.embedding;
    const bool needs_embedding = !inputs.subdivision &&
                                 (config.mode == ClusterMode::Ssc2d || config.k_source.kind == KSource::Kind::Suggest);
    if (embedding && embedding->rows() != train.num_samples())
        fail(Errc::MissingEmbedding, "embedding rows do not match the training samples");
    if (needs_embedding && !embedding) {
        auto opts = config.tsne;
        embedding = tsne::tsne(ext.features, opts).Y;
    }

    if (inputs.subdivision) {
        model.map = *inputs.subdivision;
        if (static_cast<int>(model.map.K.size()) != train.num_classes())
            fail(Errc::InvalidConfig, "subdivision class count does not match the dataset");
        model.map.validate(train.labels);
    } else {
        const auto K = resolve_k(ext, config, embedding);
        SubdivideOptions opts;
        opts.mode = config.mode;
        opts.lambda_rel = config.lambda_rel;
        opts.seed = config.seed;
        opts.min_sub_size = config.min_sub_size;
        if (config.mode == ClusterMode::Ssc2d) opts.embedding = embedding;
        if (config.mode == ClusterMode::Manual) fail(Errc::InvalidConfig, "manual mode needs a precomputed subdivision");
        model.map = subdivide(ext, K, opts);
        switch (config.k_source.kind) {
            case KSource::Kind::Manual: model.map.k_source = "manual"; break;
            case KSource::Kind::Ratio: model.map.k_source = "ratio_rule"; break;
            case KSource::Kind::Suggest: model.map.k_source = "suggest"; break;
        }
    }
    model.fusion = build_fusion_matrix(model.map);

    if (config.warm_start) {
        const auto coarse = train_softmax(ext.features, ext.labels, train.num_classes(), config.hyper);
        SoftmaxModel init;
        init.weights.resize(model.map.M, ext.dim());
        init.bias.resize(model.map.M);
        for (int k = 0; k < model.map.M; ++k) {
            const int owner = model.map.owner[static_cast<std::size_t>(k)];
            init.weights.row(k) = coarse.weights.row(owner);
            init.bias(k) = coarse.bias(owner);
        }
        model.classifier = train_softmax(ext.features, model.map.sub_labels, model.map.M, config.hyper, &init);
    } else {
        model.classifier = train_softmax(ext.features, model.map.sub_labels, model.map.M, config.hyper);
    }
    model.config = config_to_json(config);
    return model;
}

FusedPrediction predict_sfm(const SfmModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd f = model.extractor.apply_one(x);
    return fuse_predict(predict_sub(model.classifier, f), model.fusion);
}

BatchPrediction predict_sfm_batch(const SfmModel& model, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd F = model.extractor.apply(X);
    BatchPrediction out;
    out.V.resize(X.rows(), model.map.M);
    out.O.resize(X.rows(), model.num_classes());
    out.R.resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto p = fuse_predict(predict_sub(model.classifier, F.row(i).transpose()), model.fusion);
        out.V.row(i) = p.V.transpose();
        out.O.row(i) = p.O.transpose();
        out.R[static_cast<std::size_t>(i)] = p.R;
    }
    return out;
}

void save_model(const SfmModel& model, const std::filesystem::path& path) {
    io::atomic_write(path, model.to_json().dump(2) + "\n");
}

SfmModel load_model(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::MalformedFile, std::string("model file is not valid JSON: ") + e.what());
    }
    return SfmModel::from_json(doc);
}

}  // namespace sfm
