#include <doctest.h>

#include "sfm/config.hpp"
#include "sfm/io.hpp"
#include "test_helpers.hpp"

using namespace sfm;
using nlohmann::json;

TEST_CASE("full pipeline config parses") {
    const auto doc = json::parse(R"({
        "generator": {"kind": "figure1", "n_per_class": 50, "overlap": 0.5},
        "k_source": {"kind": "manual", "K": {"c2": 2, "c3": 3}},
        "clustering": {"mode": "ssc_2d", "lambda_rel": 0.2},
        "tsne": {"perplexity": 15, "iters": 300},
        "classifier": {"learning_rate": 0.1, "epochs": 40, "warm_start": true},
        "extractor": {"kind": "pca", "pca_dim": 2},
        "split": {"test_fraction": 0.3},
        "seed": 7,
        "seeds": [1, 2]
    })");
    const auto cfg = parse_pipeline_config(doc);
    CHECK(cfg.generator.figure1.n_per_class == 50);
    CHECK(cfg.generator.figure1.overlap == 0.5);
    CHECK(cfg.named_k.size() == 2);
    CHECK(cfg.sfm.mode == ClusterMode::Ssc2d);
    CHECK(cfg.sfm.lambda_rel == 0.2);
    CHECK(cfg.sfm.tsne.perplexity == 15);
    CHECK(cfg.sfm.hyper.epochs == 40);
    CHECK(cfg.sfm.warm_start);
    CHECK(cfg.sfm.extractor == ExtractorKind::Pca);
    CHECK(cfg.sfm.pca_dim == 2);
    CHECK(cfg.test_fraction == 0.3);
    CHECK(cfg.seed == 7);
    CHECK(cfg.sfm.seed == 7);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("empty config keeps defaults") {
    const auto cfg = parse_pipeline_config(json::object());
    CHECK(cfg.sfm.mode == ClusterMode::SscFullDim);
    CHECK(cfg.test_fraction == 0.25);
    CHECK(cfg.sfm.hyper.learning_rate == 0.5);
}

TEST_CASE("ratio and suggest sources") {
    auto cfg = parse_pipeline_config(json::parse(R"({"k_source": {"kind": "ratio", "t": 30}})"));
    CHECK(cfg.sfm.k_source.kind == KSource::Kind::Ratio);
    CHECK(cfg.sfm.k_source.t == 30.0);
    cfg = parse_pipeline_config(json::parse(R"({"k_source": {"kind": "suggest", "k_max": 3}})"));
    CHECK(cfg.sfm.k_source.kind == KSource::Kind::Suggest);
    CHECK(cfg.sfm.k_source.k_max == 3);
}

TEST_CASE("config errors") {
    CHECK_ERRC(parse_pipeline_config(json::parse(R"({"bogus": 1})")), Errc::InvalidConfig);
    CHECK_ERRC(parse_pipeline_config(json::parse(R"({"tsne": {"perplexity": 5, "lr": 1}})")), Errc::InvalidConfig);
    CHECK_ERRC(parse_pipeline_config(json::parse(R"({"tsne": {"iters": "many"}})")), Errc::InvalidConfig);
    CHECK_ERRC(parse_pipeline_config(json::parse(R"({"k_source": {"kind": "magic"}})")), Errc::InvalidConfig);
    CHECK_ERRC(parse_pipeline_config(json::parse(R"({"clustering": {"mode": "fancy"}})")), Errc::InvalidConfig);
    testing::TempDir dir("config");
    io::atomic_write(dir.file("c.json"), "{ nope");
    CHECK_ERRC(load_pipeline_config(dir.file("c.json")), Errc::InvalidConfig);
    io::atomic_write(dir.file("ok.json"), R"({"seed": 3})");
    CHECK(load_pipeline_config(dir.file("ok.json")).seed == 3);
}

TEST_CASE("K specs by name, index and list") {
    const std::vector<std::string> names{"a", "b", "c"};
    CHECK(parse_k_spec("1,2,3", names) == std::vector<int>{1, 2, 3});
    CHECK(parse_k_spec("b=2", names) == std::vector<int>{1, 2, 1});
    CHECK(parse_k_spec("2=4,a=2", names) == std::vector<int>{2, 1, 4});
    CHECK_ERRC(parse_k_spec("1,2", names), Errc::InvalidConfig);
    CHECK_ERRC(parse_k_spec("z=2", names), Errc::InvalidConfig);
    CHECK_ERRC(parse_k_spec("a=x", names), Errc::Usage);
    CHECK_ERRC(parse_k_spec("1,two,3", names), Errc::Usage);
}
