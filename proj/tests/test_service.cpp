#include <doctest.h>

#include "sfm/service.hpp"
#include "sfm/synthgen.hpp"
#include "test_helpers.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

using namespace sfm;
using nlohmann::json;

namespace {

LabeledDataset small_figure1() {
    synth::Figure1Config f;
    f.n_per_class = 40;
    f.seed = 1;
    return synth::gen_figure1(f).dataset;
}

service::ServiceOptions fast_options() {
    service::ServiceOptions o;
    o.seed = 3;
    o.base.hyper.epochs = 200;
    return o;
}

void embed_and_wait(service::Service& svc) {
    const auto r = svc.start_embed(json{{"iters", 300}, {"perplexity", 20}});
    REQUIRE(r.status == 202);
    svc.wait_idle();
    REQUIRE(svc.job(r.body["job_id"].get<std::string>()).body["status"] == "done");
}

}  // namespace

TEST_CASE("service round trip: embed, preview, train, report") {
    testing::TempDir dir("service");
    auto opts = fast_options();
    opts.report_dir = dir.path.string();
    service::Service svc(small_figure1(), opts);

    auto s = svc.summary();
    CHECK(s.status == 200);
    CHECK(s.body["n"] == 160);
    CHECK(s.body["embedding_ready"] == false);
    CHECK(svc.embedding(std::nullopt).status == 409);
    CHECK(svc.preview(json{{"class", "c2"}, {"k", 2}}).status == 409);
    CHECK(svc.train(json{{"K", {1, 1, 2, 2}}}).status == 409);

    embed_and_wait(svc);
    const auto e = svc.embedding(std::nullopt);
    REQUIRE(e.status == 200);
    CHECK(e.body["points"].size() == 160);
    CHECK(svc.embedding(std::string("c3")).body["points"].size() == 40);
    CHECK(svc.embedding(std::string("nope")).status == 404);

    // preview is pure and repeatable
    const auto before = svc.state_digest();
    const auto p1 = svc.preview(json{{"class", "c3"}, {"k", 2}});
    const auto p2 = svc.preview(json{{"class", 3}, {"k", 2}});
    REQUIRE(p1.status == 200);
    CHECK(p1.body == p2.body);
    CHECK(p1.body["labels"].size() == 40);
    CHECK(svc.preview(json{{"class", "c3"}, {"k", 1}}).body["silhouette"].is_null());
    CHECK(svc.preview(json{{"class", "c3"}, {"k", 41}}).status == 400);
    CHECK(svc.preview(json{{"class", "c9"}, {"k", 2}}).status == 404);
    CHECK(svc.state_digest() == before);

    CHECK(svc.train(json{{"K", {1, 1, 2}}}).status == 400);
    CHECK(svc.train(json{{"K", {{"c3", 0}}}}).status == 400);
    CHECK(svc.train(json{{"K", {{"c3", 999}}}}).status == 400);
    CHECK(svc.state_digest() == before);

    const auto t = svc.train(json{{"K", {{"c2", 2}, {"c3", 2}}}});
    REQUIRE(t.status == 202);
    const std::string id = t.body["job_id"];
    svc.wait_idle();
    const auto rep = svc.report(id);
    REQUIRE(rep.status == 200);
    CHECK(rep.body["K"] == json({1, 1, 2, 2}));
    CHECK(rep.body["M"] == 6);
    CHECK(rep.body["sfm"].contains("accuracy"));
    CHECK(rep.body["baseline"].contains("accuracy"));
    CHECK(rep.body["sfm"]["accuracy"].get<double>() > rep.body["baseline"]["accuracy"].get<double>());
    CHECK(svc.summary().body["classes"][3]["committed_k"] == 2);
    CHECK(std::filesystem::exists(dir.path / "report-2.json"));

    CHECK(svc.job("job-99").status == 404);
    CHECK(svc.report("job-99").status == 404);
}

TEST_CASE("a second job while one is running gets 409") {
    service::Service svc(small_figure1(), fast_options());
    const auto first = svc.start_embed(json{{"iters", 1500}});
    REQUIRE(first.status == 202);
    const auto second = svc.start_embed(json{{"iters", 10}});
    CHECK(second.status == 409);
    CHECK(second.body["code"] == "JobInProgress");
    CHECK(svc.running_jobs() <= 1);
    CHECK(svc.report(first.body["job_id"]).status == 202);
    svc.wait_idle();
    CHECK(svc.running_jobs() == 0);
    CHECK(svc.start_embed(json{{"iters", 10}}).status == 202);
    svc.wait_idle();
}

TEST_CASE("http binding serves the same endpoints") {
    service::Service svc(small_figure1(), fast_options());
    service::HttpServer http(svc, "127.0.0.1", 0);
    REQUIRE(http.port() > 0);
    httplib::Client cli("127.0.0.1", http.port());

    auto res = cli.Get("/api/summary");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["n"] == 160);

    res = cli.Post("/api/embed", R"({"iters": 200})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    const std::string id = json::parse(res->body)["job_id"];
    svc.wait_idle();

    res = cli.Get("/api/jobs/" + id);
    REQUIRE(res);
    CHECK(json::parse(res->body)["status"] == "done");

    res = cli.Get("/api/embedding?class=c0");
    REQUIRE(res);
    CHECK(json::parse(res->body)["points"].size() == 40);

    res = cli.Post("/api/preview", "not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Get("/api/report/job-42");
    REQUIRE(res);
    CHECK(res->status == 404);
}
