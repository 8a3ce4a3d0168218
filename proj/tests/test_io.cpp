#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sfm/io.hpp"
#include "test_helpers.hpp"

using namespace sfm;

TEST_CASE("format_double round-trips exactly") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1e3);
    for (int i = 0; i < 2000; ++i) {
        const double v = nd(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
        double back = 0.0;
        REQUIRE(io::parse_double(io::format_double(v), back));
        CHECK(back == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(-3.0) == "-3");
}

TEST_CASE("strict numeric parsing") {
    double d = 0.0;
    CHECK(io::parse_double(" 1.5 ", d));
    CHECK(d == 1.5);
    CHECK(io::parse_double("+2", d));
    CHECK(d == 2.0);
    CHECK_FALSE(io::parse_double("1.5x", d));
    CHECK_FALSE(io::parse_double("", d));
    CHECK_FALSE(io::parse_double("abc", d));

    long long k = 0;
    CHECK(io::parse_int("42", k));
    CHECK(k == 42);
    CHECK_FALSE(io::parse_int("4.2", k));
    CHECK_FALSE(io::parse_int(" ", k));
}

TEST_CASE("split trims fields and keeps empties") {
    auto f = io::split(" a, b ,,c ", ',');
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "a");
    CHECK(f[1] == "b");
    CHECK(f[2] == "");
    CHECK(f[3] == "c");
}

TEST_CASE("atomic_write replaces content and leaves no temp file") {
    testing::TempDir dir("io_atomic");
    const auto path = dir.file("out.txt");
    io::atomic_write(path, "first");
    io::atomic_write(path, "second");
    CHECK(io::read_file(path) == "second");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    CHECK_ERRC(io::atomic_write(dir.file("missing/dir/x.txt"), "x"), Errc::Io);
    CHECK_ERRC(io::read_file(dir.file("nope")), Errc::Io);
}

TEST_CASE("read_numeric_csv") {
    testing::TempDir dir("io_numeric");
    const auto path = dir.file("t.csv");
    io::atomic_write(path, "a,b\n1,2\n3,4.5\n");
    auto t = io::read_numeric_csv(path);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == 4.5);
}

TEST_CASE("fnv1a distinguishes order") {
    std::vector<int> a{1, 2, 3}, b{3, 2, 1};
    CHECK(io::fnv1a(a) != io::fnv1a(b));
    CHECK(io::fnv1a(a) == io::fnv1a(std::vector<int>{1, 2, 3}));
}
