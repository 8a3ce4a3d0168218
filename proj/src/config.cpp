#include "sfm/config.hpp"

#include <algorithm>
#include <initializer_list>

#include "sfm/error.hpp"
#include "sfm/io.hpp"

namespace sfm {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(Errc::InvalidConfig, where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) fail(Errc::InvalidConfig, "unknown config key '" + where + "." + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& target) {
    if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace

PipelineConfig parse_pipeline_config(const json& doc) {
    PipelineConfig cfg;
    try {
        only_keys(doc, "config", {"data", "generator", "k_source", "clustering", "tsne", "classifier", "extractor",
                                  "split", "seed", "seeds", "output_dir"});
        if (doc.contains("data")) {
            const auto& d = doc["data"];
            only_keys(d, "data", {"train", "test"});
            if (d.contains("train")) cfg.train_path = d["train"].get<std::string>();
            if (d.contains("test")) cfg.test_path = d["test"].get<std::string>();
        }
        if (doc.contains("generator")) {
            const auto& g = doc["generator"];
            only_keys(g, "generator", {"kind", "n_per_class", "dim", "mode_separation", "overlap", "noise_sigma", "counts"});
            const auto kind = g.value("kind", std::string("figure1"));
            if (kind == "figure1") {
                cfg.generator.kind = eval::GeneratorConfig::Kind::Figure1;
                auto& f = cfg.generator.figure1;
                read(g, "n_per_class", f.n_per_class);
                read(g, "dim", f.dim);
                read(g, "mode_separation", f.mode_separation);
                read(g, "overlap", f.overlap);
                read(g, "noise_sigma", f.noise_sigma);
            } else if (kind == "imbalanced") {
                cfg.generator.kind = eval::GeneratorConfig::Kind::Imbalanced;
                auto& f = cfg.generator.imbalanced;
                read(g, "counts", f.counts);
                read(g, "dim", f.dim);
                read(g, "noise_sigma", f.noise_sigma);
            } else {
                fail(Errc::InvalidConfig, "unknown generator kind '" + kind + "'");
            }
        }
        if (doc.contains("k_source")) {
            const auto& k = doc["k_source"];
            only_keys(k, "k_source", {"kind", "K", "t", "k_max"});
            const auto kind = k.value("kind", std::string("manual"));
            if (kind == "manual") {
                cfg.sfm.k_source = KSource::manual({});
                if (k.contains("K")) {
                    if (k["K"].is_array()) cfg.sfm.k_source.K = k["K"].get<std::vector<int>>();
                    else if (k["K"].is_object())
                        for (const auto& [name, v] : k["K"].items()) cfg.named_k.emplace_back(name, v.get<int>());
                    else fail(Errc::InvalidConfig, "k_source.K must be an array or an object");
                }
            } else if (kind == "ratio") {
                cfg.sfm.k_source = KSource::ratio();
                if (k.contains("t") && !k["t"].is_null()) cfg.sfm.k_source.t = k["t"].get<double>();
            } else if (kind == "suggest") {
                cfg.sfm.k_source = KSource::suggest(k.value("k_max", 4));
            } else {
                fail(Errc::InvalidConfig, "unknown k_source kind '" + kind + "'");
            }
        }
        if (doc.contains("clustering")) {
            const auto& c = doc["clustering"];
            only_keys(c, "clustering", {"mode", "lambda_rel", "min_sub_size"});
            if (c.contains("mode")) cfg.sfm.mode = cluster_mode_from_string(c["mode"].get<std::string>());
            read(c, "lambda_rel", cfg.sfm.lambda_rel);
            read(c, "min_sub_size", cfg.sfm.min_sub_size);
        }
        if (doc.contains("tsne")) {
            const auto& t = doc["tsne"];
            only_keys(t, "tsne", {"perplexity", "iters", "seed"});
            read(t, "perplexity", cfg.sfm.tsne.perplexity);
            read(t, "iters", cfg.sfm.tsne.iters);
            read(t, "seed", cfg.sfm.tsne.seed);
        }
        if (doc.contains("classifier")) {
            const auto& c = doc["classifier"];
            only_keys(c, "classifier", {"learning_rate", "epochs", "l2", "warm_start"});
            read(c, "learning_rate", cfg.sfm.hyper.learning_rate);
            read(c, "epochs", cfg.sfm.hyper.epochs);
            read(c, "l2", cfg.sfm.hyper.l2);
            read(c, "warm_start", cfg.sfm.warm_start);
        }
        if (doc.contains("extractor")) {
            const auto& e = doc["extractor"];
            only_keys(e, "extractor", {"kind", "pca_dim"});
            if (e.contains("kind")) cfg.sfm.extractor = extractor_kind_from_string(e["kind"].get<std::string>());
            read(e, "pca_dim", cfg.sfm.pca_dim);
        }
        if (doc.contains("split")) {
            only_keys(doc["split"], "split", {"test_fraction"});
            read(doc["split"], "test_fraction", cfg.test_fraction);
        }
        read(doc, "seed", cfg.seed);
        read(doc, "seeds", cfg.seeds);
        read(doc, "output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        fail(Errc::InvalidConfig, std::string("bad config value: ") + e.what());
    }
    cfg.sfm.seed = cfg.seed;
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_pipeline_config(doc);
}

std::vector<int> parse_k_spec(const std::string& spec, const std::vector<std::string>& class_names) {
    const int L = static_cast<int>(class_names.size());
    const auto parts = io::split(spec, ',');
    const bool keyed = spec.find('=') != std::string::npos;
    if (!keyed) {
        std::vector<int> K;
        for (auto p : parts) {
            long long v = 0;
            if (!io::parse_int(p, v)) fail(Errc::Usage, "bad K entry '" + std::string(p) + "'");
            K.push_back(static_cast<int>(v));
        }
        if (static_cast<int>(K.size()) != L)
            fail(Errc::InvalidConfig, "K lists " + std::to_string(K.size()) + " values for " + std::to_string(L) + " classes");
        return K;
    }
    std::vector<int> K(static_cast<std::size_t>(L), 1);
    for (auto p : parts) {
        const auto eq = p.find('=');
        if (eq == std::string_view::npos) fail(Errc::Usage, "bad K entry '" + std::string(p) + "'");
        const std::string key(io::trim(p.substr(0, eq)));
        long long v = 0;
        if (!io::parse_int(p.substr(eq + 1), v)) fail(Errc::Usage, "bad K value in '" + std::string(p) + "'");
        auto it = std::find(class_names.begin(), class_names.end(), key);
        int idx = -1;
        if (it != class_names.end()) {
            idx = static_cast<int>(it - class_names.begin());
        } else {
            long long as_index = 0;
            if (io::parse_int(key, as_index) && as_index >= 0 && as_index < L) idx = static_cast<int>(as_index);
        }
        if (idx < 0) fail(Errc::InvalidConfig, "K names unknown class '" + key + "'");
        K[static_cast<std::size_t>(idx)] = static_cast<int>(v);
    }
    return K;
}

}  // namespace sfm
