#include <doctest.h>

#include <cmath>
#include <set>

#include "sfm/dataset.hpp"
#include "sfm/io.hpp"
#include "sfm/synthgen.hpp"
#include "test_helpers.hpp"

using namespace sfm;

TEST_CASE("CSV parse assigns labels in first-appearance order") {
    auto ds = parse_dataset_csv("f0,f1,label\n1,2,a\n3,4,a\n5,6,b\n7,8,b\n");
    CHECK(ds.num_samples() == 4);
    CHECK(ds.dim() == 2);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.labels == std::vector<int>{0, 0, 1, 1});
    CHECK(ds.features(3, 1) == 8.0);
    CHECK(ds.sample_ids[2] == "s2");

    auto swapped = parse_dataset_csv("id,f0,label\nx,1,zeta\ny,2,alpha\nz,3,zeta\n");
    CHECK(swapped.class_names == std::vector<std::string>{"zeta", "alpha"});
    CHECK(swapped.labels == std::vector<int>{0, 1, 0});
    CHECK(swapped.sample_ids == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("CSV errors") {
    CHECK_ERRC(parse_dataset_csv("f0,f1,label\n1,abc,a\n2,3,b\n"), Errc::MalformedFile);
    CHECK_ERRC(parse_dataset_csv("f0,f1,label\n1,2,a\n2,b\n"), Errc::MalformedFile);
    CHECK_ERRC(parse_dataset_csv("f0,f1,label\n1,2,a\n3,4,a\n"), Errc::SingleClass);
    CHECK_ERRC(parse_dataset_csv("f0,f1,label\n"), Errc::EmptyDataset);
    CHECK_ERRC(parse_dataset_csv(""), Errc::EmptyDataset);
    CHECK_ERRC(parse_dataset_csv("f0,f1\n1,2\n"), Errc::MalformedFile);
    CHECK_ERRC(parse_dataset_csv("f0,label\nnan,a\n1,b\n"), Errc::MalformedFile);
}

TEST_CASE("JSON parse") {
    auto ds = parse_dataset_json(R"({"features": [[1,2],[3,4],[5,6]], "labels": ["b","a","b"], "ids": ["p","q","r"]})");
    CHECK(ds.class_names == std::vector<std::string>{"b", "a"});
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.sample_ids[1] == "q");
    CHECK_ERRC(parse_dataset_json(R"({"features": [[1,2],[3]], "labels": ["a","b"]})"), Errc::MalformedFile);
    CHECK_ERRC(parse_dataset_json(R"({"features": [[1],[2]], "labels": ["a","a"]})"), Errc::SingleClass);
    CHECK_ERRC(parse_dataset_json("{"), Errc::MalformedFile);
}

TEST_CASE("save/load round-trip is bit exact") {
    testing::TempDir dir("dataset_roundtrip");
    auto ds = synth::gen_figure1({.n_per_class = 20, .dim = 3, .seed = 11}).dataset;
    for (auto fmt : {DataFormat::Csv, DataFormat::Json}) {
        const auto path = dir.file(fmt == DataFormat::Csv ? "d.csv" : "d.json");
        save_dataset(ds, path, fmt);
        auto back = load_dataset(path);
        CHECK(back.features == ds.features);
        CHECK(back.labels == ds.labels);
        CHECK(back.class_names == ds.class_names);
        CHECK(back.sample_ids == ds.sample_ids);
        CHECK(back.modes == ds.modes);
    }
}

TEST_CASE("stratified split") {
    auto ds = synth::gen_imbalanced({50, 50}, 2, 1);
    auto idx = split_indices(ds, {0.2, 5, true});
    int test_c0 = 0, test_c1 = 0;
    for (int r : idx.test) (ds.labels[static_cast<std::size_t>(r)] == 0 ? test_c0 : test_c1)++;
    CHECK(test_c0 == 10);
    CHECK(test_c1 == 10);
    CHECK(idx.train.size() + idx.test.size() == 100);

    std::set<int> all(idx.train.begin(), idx.train.end());
    all.insert(idx.test.begin(), idx.test.end());
    CHECK(all.size() == 100);

    auto again = split_indices(ds, {0.2, 5, true});
    CHECK(again.train == idx.train);
    CHECK(again.test == idx.test);
    auto other = split_indices(ds, {0.2, 6, true});
    CHECK(other.test != idx.test);

    auto [train, test] = split_stratified(ds, {0.2, 5, true});
    CHECK(train.num_samples() == 80);
    CHECK(test.num_samples() == 20);
}

TEST_CASE("split proportions stay within one sample") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> cnt(2, 40);
        std::vector<int> counts{cnt(rng), cnt(rng), cnt(rng)};
        auto ds = synth::gen_imbalanced(counts, 2, seed);
        const double f = 0.1 + 0.05 * static_cast<double>(seed % 10);
        auto idx = split_indices(ds, {f, seed, true});
        std::vector<int> per(3, 0);
        for (int r : idx.test) ++per[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(r)])];
        for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(per[static_cast<std::size_t>(c)] - f * counts[static_cast<std::size_t>(c)]) <= 1.0);
            CHECK(per[static_cast<std::size_t>(c)] >= 1);
            CHECK(per[static_cast<std::size_t>(c)] <= counts[static_cast<std::size_t>(c)] - 1);
        }
    }
}

TEST_CASE("split errors") {
    auto ds = parse_dataset_csv("f0,label\n1,a\n2,a\n3,b\n");
    CHECK_ERRC(split_indices(ds, {0.5, 0, true}), Errc::ClassTooSmall);
    auto ok = synth::gen_imbalanced({4, 4}, 2, 0);
    CHECK_ERRC(split_indices(ok, {0.0, 0, true}), Errc::InvalidConfig);
    CHECK_ERRC(split_indices(ok, {1.0, 0, true}), Errc::InvalidConfig);
}

TEST_CASE("validate rejects broken datasets") {
    auto ds = synth::gen_imbalanced({3, 3}, 2, 0);
    auto bad = ds;
    bad.features(0, 0) = std::nan("");
    CHECK_ERRC(bad.validate(), Errc::NonFinite);
    bad = ds;
    bad.labels[0] = 7;
    CHECK_ERRC(bad.validate(), Errc::MalformedFile);
    bad = ds;
    bad.labels.pop_back();
    CHECK_ERRC(bad.validate(), Errc::LengthMismatch);
    bad = ds;
    bad.class_names.push_back("ghost");
    CHECK_ERRC(bad.validate(true), Errc::EmptyClass);
    CHECK_NOTHROW(bad.validate(false));
}
