#include "sfm/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <numeric>

#include "sfm/error.hpp"
#include "sfm/io.hpp"
#include "sfm/ssc.hpp"
#include "sfm/subdivision.hpp"

namespace sfm::service {

using nlohmann::json;

namespace {

Response error_response(int status, const std::string& code, const std::string& message) {
    return {status, json{{"code", code}, {"message", message}}};
}

}  // namespace

std::string to_string(JobStatus status) {
    switch (status) {
        case JobStatus::Queued: return "queued";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "failed";
}

Service::Service(LabeledDataset dataset, ServiceOptions options)
    : dataset_(std::move(dataset)),
      options_(std::move(options)),
      split_(split_indices(dataset_, SplitSpec{options_.test_fraction, options_.seed, true})),
      committed_sub_(static_cast<std::size_t>(dataset_.num_samples()), -1) {
    dataset_.validate(true);
    train_counts_.assign(static_cast<std::size_t>(dataset_.num_classes()), 0);
    for (int r : split_.train) ++train_counts_[static_cast<std::size_t>(dataset_.labels[static_cast<std::size_t>(r)])];
    committed_k_.assign(static_cast<std::size_t>(dataset_.num_classes()), 1);
    worker_ = std::jthread([this](std::stop_token st) { worker_loop(st); });
}

Service::~Service() {
    worker_.request_stop();
    queue_cv_.notify_all();
}

std::optional<int> Service::class_index(const std::string& text) const {
    for (int c = 0; c < dataset_.num_classes(); ++c)
        if (dataset_.class_names[static_cast<std::size_t>(c)] == text) return c;
    long long v = 0;
    if (io::parse_int(text, v) && v >= 0 && v < dataset_.num_classes()) return static_cast<int>(v);
    return std::nullopt;
}

Response Service::summary() const {
    std::shared_lock lock(mutex_);
    const auto counts = dataset_.class_counts();
    json classes = json::array();
    for (int c = 0; c < dataset_.num_classes(); ++c) {
        const auto sc = static_cast<std::size_t>(c);
        classes.push_back({{"index", c},
                           {"name", dataset_.class_names[sc]},
                           {"count", counts[sc]},
                           {"max_k", train_counts_[sc]},
                           {"committed_k", committed_k_[sc]}});
    }
    json jobs = json::array();
    for (const auto& [id, job] : jobs_) jobs.push_back({{"id", id}, {"kind", job.kind}, {"status", to_string(job.status)}});
    return {200, json{{"n", dataset_.num_samples()},
                      {"d", dataset_.dim()},
                      {"n_train", split_.train.size()},
                      {"n_test", split_.test.size()},
                      {"classes", std::move(classes)},
                      {"embedding_ready", embedding_.has_value()},
                      {"jobs", std::move(jobs)}}};
}

Response Service::submit(const std::string& kind, std::function<json()> work) {
    std::unique_lock lock(mutex_);
    {
        std::lock_guard q(queue_mutex_);
        if (busy_ || pending_) return error_response(409, "JobInProgress", "another job is queued or running");
        const std::string id = "job-" + std::to_string(next_job_++);
        jobs_[id] = Job{id, kind, JobStatus::Queued, {}, {}};
        pending_.emplace(id, std::move(work));
        busy_ = true;
        queue_cv_.notify_all();
        return {202, json{{"job_id", id}, {"status", "queued"}}};
    }
}

void Service::worker_loop(std::stop_token stop) {
    while (true) {
        std::pair<std::string, std::function<json()>> task;
        {
            std::unique_lock q(queue_mutex_);
            queue_cv_.wait(q, stop, [&] { return pending_.has_value(); });
            if (stop.stop_requested()) return;
            task = std::move(*pending_);
            pending_.reset();
        }
        {
            std::unique_lock lock(mutex_);
            jobs_[task.first].status = JobStatus::Running;
        }
        json result;
        std::string error;
        try {
            result = task.second();
        } catch (const std::exception& e) {
            error = e.what();
        }
        {
            std::unique_lock lock(mutex_);
            auto& job = jobs_[task.first];
            job.status = error.empty() ? JobStatus::Done : JobStatus::Failed;
            job.error = error;
            job.result = std::move(result);
        }
        {
            std::lock_guard q(queue_mutex_);
            busy_ = false;
        }
        idle_cv_.notify_all();
    }
}

void Service::wait_idle() {
    std::unique_lock q(queue_mutex_);
    idle_cv_.wait(q, [&] { return !busy_ && !pending_; });
}

int Service::running_jobs() const {
    std::shared_lock lock(mutex_);
    int running = 0;
    for (const auto& [id, job] : jobs_) running += job.status == JobStatus::Running ? 1 : 0;
    return running;
}

Response Service::start_embed(const json& body) {
    tsne::TsneOptions opts = options_.base.tsne;
    try {
        if (!body.is_null() && !body.is_object()) return error_response(400, "BadRequest", "body must be a JSON object");
        if (body.is_object()) {
            opts.perplexity = body.value("perplexity", opts.perplexity);
            opts.iters = body.value("iters", opts.iters);
            opts.seed = body.value("seed", opts.seed);
        }
    } catch (const json::exception& e) {
        return error_response(400, "BadRequest", e.what());
    }
    if (opts.iters < 1 || !(opts.perplexity > 0.0)) return error_response(400, "BadRequest", "invalid t-SNE parameters");
    return submit("embed", [this, opts] {
        const auto fx = FeatureExtractor::fit(dataset_.features, ExtractorKind::Standardize);
        auto result = tsne::tsne(fx.apply(dataset_.features), opts);
        const double kl = result.kl_final();
        std::unique_lock lock(mutex_);
        embedding_ = std::move(result);
        return json{{"kl_final", kl}};
    });
}

Response Service::embedding(const std::optional<std::string>& class_filter) const {
    std::shared_lock lock(mutex_);
    if (!embedding_) return error_response(409, "NoEmbedding", "no embedding has been computed yet");
    std::optional<int> only;
    if (class_filter && !class_filter->empty()) {
        only = class_index(*class_filter);
        if (!only) return error_response(404, "UnknownClass", "unknown class '" + *class_filter + "'");
    }
    json points = json::array();
    for (int i = 0; i < dataset_.num_samples(); ++i) {
        const auto si = static_cast<std::size_t>(i);
        const int cls = dataset_.labels[si];
        if (only && cls != *only) continue;
        json p{{"id", dataset_.sample_ids[si]}, {"x", embedding_->Y(i, 0)}, {"y", embedding_->Y(i, 1)}, {"class", cls}};
        if (committed_sub_[si] >= 0) p["sub"] = committed_sub_[si];
        points.push_back(std::move(p));
    }
    return {200, json{{"points", std::move(points)}, {"kl_final", embedding_->kl_final()}}};
}

Response Service::preview(const json& body) const {
    int cls = -1, k = 0;
    std::uint64_t seed = options_.seed;
    try {
        if (!body.is_object() || !body.contains("class") || !body.contains("k"))
            return error_response(400, "BadRequest", "preview needs 'class' and 'k'");
        const auto& c = body["class"];
        auto found = c.is_string() ? class_index(c.get<std::string>()) : class_index(std::to_string(c.get<long long>()));
        if (!found) return error_response(404, "UnknownClass", "unknown class");
        cls = *found;
        k = body["k"].get<int>();
        seed = body.value("seed", seed);
    } catch (const json::exception& e) {
        return error_response(400, "BadRequest", e.what());
    }

    std::vector<int> rows = dataset_.indices_of_class(cls);
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()), 2);
    {
        std::shared_lock lock(mutex_);
        if (!embedding_) return error_response(409, "NoEmbedding", "no embedding has been computed yet");
        for (std::size_t r = 0; r < rows.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = embedding_->Y.row(rows[r]);
    }
    if (k < 1 || k > static_cast<int>(rows.size()))
        return error_response(400, "KOutOfRange", "k must lie in [1, " + std::to_string(rows.size()) + "]");

    std::vector<int> labels;
    try {
        labels = ssc::ssc(pts.transpose(), k, options_.base.lambda_rel, derive_seed(seed, static_cast<std::uint64_t>(cls)));
    } catch (const Error& e) {
        return error_response(422, std::string(errc_name(e.code())), e.what());
    }
    json out = json::array();
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.push_back({{"id", dataset_.sample_ids[static_cast<std::size_t>(rows[r])]}, {"sub", labels[r]}});
    const double s = k == 1 ? std::nan("") : silhouette(pts, labels);
    return {200, json{{"class", cls}, {"k", k}, {"labels", std::move(out)}, {"silhouette", std::isfinite(s) ? json(s) : json(nullptr)}}};
}

Response Service::train(const json& body) {
    const int L = dataset_.num_classes();
    std::vector<int> K(static_cast<std::size_t>(L), 1);
    SfmConfig cfg = options_.base;
    try {
        if (!body.is_object() || !body.contains("K")) return error_response(400, "InvalidK", "body needs 'K'");
        const auto& kj = body["K"];
        if (kj.is_array()) {
            if (static_cast<int>(kj.size()) != L) return error_response(400, "InvalidK", "K must list one value per class");
            for (int c = 0; c < L; ++c) K[static_cast<std::size_t>(c)] = kj[static_cast<std::size_t>(c)].get<int>();
        } else if (kj.is_object()) {
            for (const auto& [name, v] : kj.items()) {
                auto c = class_index(name);
                if (!c) return error_response(400, "InvalidK", "unknown class '" + name + "'");
                K[static_cast<std::size_t>(*c)] = v.get<int>();
            }
        } else {
            return error_response(400, "InvalidK", "K must be an object or an array");
        }
        if (body.contains("hyper")) {
            const auto& h = body["hyper"];
            cfg.hyper.learning_rate = h.value("learning_rate", cfg.hyper.learning_rate);
            cfg.hyper.epochs = h.value("epochs", cfg.hyper.epochs);
            cfg.hyper.l2 = h.value("l2", cfg.hyper.l2);
            cfg.lambda_rel = h.value("lambda_rel", cfg.lambda_rel);
            cfg.warm_start = h.value("warm_start", cfg.warm_start);
        }
    } catch (const json::exception& e) {
        return error_response(400, "InvalidK", e.what());
    }
    for (int c = 0; c < L; ++c) {
        const int k = K[static_cast<std::size_t>(c)];
        if (k < 1 || k > train_counts_[static_cast<std::size_t>(c)])
            return error_response(400, "InvalidK", "K for class '" + dataset_.class_names[static_cast<std::size_t>(c)] +
                                                       "' must lie in [1, " +
                                                       std::to_string(train_counts_[static_cast<std::size_t>(c)]) + "]");
    }
    if (cfg.hyper.epochs < 0 || !(cfg.hyper.learning_rate > 0.0) || !(cfg.lambda_rel > 0.0 && cfg.lambda_rel <= 1.0))
        return error_response(400, "BadRequest", "invalid hyperparameters");

    Eigen::MatrixXd train_coords;
    {
        std::shared_lock lock(mutex_);
        if (!embedding_) return error_response(409, "NoEmbedding", "compute an embedding before training");
        train_coords.resize(static_cast<Eigen::Index>(split_.train.size()), 2);
        for (std::size_t r = 0; r < split_.train.size(); ++r)
            train_coords.row(static_cast<Eigen::Index>(r)) = embedding_->Y.row(split_.train[r]);
    }
    cfg.k_source = KSource::manual(K);
    cfg.mode = ClusterMode::Ssc2d;
    cfg.seed = options_.seed;

    return submit("train", [this, cfg, K, train_coords] {
        const auto train = dataset_.subset(split_.train);
        const auto test = dataset_.subset(split_.test);
        TrainInputs inputs;
        inputs.embedding = train_coords;
        const auto model = train_sfm(train, cfg, inputs);
        auto base_cfg = cfg;
        base_cfg.k_source = KSource::manual(std::vector<int>(K.size(), 1));
        base_cfg.mode = ClusterMode::SscFullDim;
        const auto baseline = train_sfm(train, base_cfg);
        const auto rs = eval::evaluate(model, test);
        const auto rb = eval::evaluate(baseline, test);
        json report{{"K", model.map.K}, {"requested_K", K}, {"M", model.map.M}, {"sfm", rs.to_json()}, {"baseline", rb.to_json()}};

        std::unique_lock lock(mutex_);
        committed_k_ = model.map.K;
        std::fill(committed_sub_.begin(), committed_sub_.end(), -1);
        for (std::size_t r = 0; r < split_.train.size(); ++r)
            committed_sub_[static_cast<std::size_t>(split_.train[r])] = model.map.sub_labels[r];
        if (!options_.report_dir.empty()) {
            std::filesystem::create_directories(options_.report_dir);
            io::atomic_write(std::filesystem::path(options_.report_dir) / ("report-" + std::to_string(next_job_ - 1) + ".json"),
                             report.dump(2) + "\n");
        }
        return report;
    });
}

Response Service::job(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return error_response(404, "UnknownJob", "no job '" + id + "'");
    json out{{"id", id}, {"kind", it->second.kind}, {"status", to_string(it->second.status)}};
    if (it->second.status == JobStatus::Failed) out["error"] = it->second.error;
    if (it->second.status == JobStatus::Done && it->second.kind == "train") out["report"] = "/api/report/" + id;
    return {200, out};
}

Response Service::report(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return error_response(404, "UnknownJob", "no job '" + id + "'");
    const auto& job = it->second;
    if (job.status == JobStatus::Queued || job.status == JobStatus::Running)
        return error_response(202, "NotFinished", "job '" + id + "' is " + to_string(job.status));
    if (job.status == JobStatus::Failed) return error_response(409, "JobFailed", job.error);
    json out = job.result;
    out["job_id"] = id;
    return {200, out};
}

std::string Service::state_digest() const {
    std::shared_lock lock(mutex_);
    json s;
    s["k"] = committed_k_;
    s["sub"] = committed_sub_;
    s["next"] = next_job_;
    json jobs = json::array();
    for (const auto& [id, job] : jobs_) jobs.push_back({id, job.kind, to_string(job.status), job.error, job.result});
    s["jobs"] = std::move(jobs);
    if (embedding_) {
        s["emb"] = std::vector<double>(embedding_->Y.data(), embedding_->Y.data() + embedding_->Y.size());
    }
    return std::to_string(std::hash<std::string>{}(s.dump()));
}

struct HttpServer::Impl {
    httplib::Server server;
    std::jthread thread;
};

namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

json parse_body(const httplib::Request& req, bool& ok) {
    ok = true;
    if (req.body.empty()) return json(nullptr);
    try {
        return json::parse(req.body);
    } catch (const json::parse_error&) {
        ok = false;
        return json(nullptr);
    }
}

}  // namespace

HttpServer::HttpServer(Service& service, const std::string& host, int port, const std::string& ui_dir)
    : impl_(std::make_unique<Impl>()) {
    auto& svr = impl_->server;
    auto with_body = [](auto handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            bool ok = true;
            const auto body = parse_body(req, ok);
            if (!ok) {
                send(res, Response{400, json{{"code", "BadRequest"}, {"message", "body is not valid JSON"}}});
                return;
            }
            send(res, handler(body));
        };
    };
    svr.Get("/api/summary", [&service](const httplib::Request&, httplib::Response& res) { send(res, service.summary()); });
    svr.Post("/api/embed", with_body([&service](const json& b) { return service.start_embed(b); }));
    svr.Get("/api/embedding", [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> filter;
        if (req.has_param("class")) filter = req.get_param_value("class");
        send(res, service.embedding(filter));
    });
    svr.Post("/api/preview", with_body([&service](const json& b) { return service.preview(b); }));
    svr.Post("/api/train", with_body([&service](const json& b) { return service.train(b); }));
    svr.Get(R"(/api/jobs/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.job(req.matches[1]));
    });
    svr.Get(R"(/api/report/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.report(req.matches[1]));
    });
    if (!ui_dir.empty() && !svr.set_mount_point("/", ui_dir))
        fail(Errc::Io, "UI directory '" + ui_dir + "' does not exist");

    if (port == 0) {
        port_ = svr.bind_to_any_port(host);
    } else {
        port_ = svr.bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) fail(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
    svr.wait_until_ready();
}

void HttpServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::stop() { impl_->server.stop(); }

HttpServer::~HttpServer() {
    stop();
    wait();
}

}  // namespace sfm::service
