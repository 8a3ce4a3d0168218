#pragma once

#include <Eigen/Dense>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "sfm/dataset.hpp"
#include "sfm/eval.hpp"
#include "sfm/sfm_model.hpp"

namespace sfm::service {

struct Response {
    int status = 200;
    nlohmann::json body;
};

struct ServiceOptions {
    std::uint64_t seed = 0;
    double test_fraction = 0.25;
    SfmConfig base;              // extractor, classifier and clustering defaults
    std::string report_dir;      // when set, finished reports are also written here
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string to_string(JobStatus status);

/// Single-dataset session behind the K-selection UI. Reads take a shared
/// lock; every mutation (commit, job transitions) goes through the exclusive
/// lock, and jobs run one at a time on a background worker.
class Service {
public:
    Service(LabeledDataset dataset, ServiceOptions options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    Response summary() const;
    Response start_embed(const nlohmann::json& body);
    Response embedding(const std::optional<std::string>& class_filter) const;
    Response preview(const nlohmann::json& body) const;
    Response train(const nlohmann::json& body);
    Response job(const std::string& id) const;
    Response report(const std::string& id) const;

    /// Digest of all session state; read endpoints must leave it unchanged.
    std::string state_digest() const;

    /// Blocks until no job is queued or running.
    void wait_idle();

    /// Number of jobs currently in the running state (never above 1).
    int running_jobs() const;

private:
    struct Job {
        std::string id;
        std::string kind;  // embed | train
        JobStatus status = JobStatus::Queued;
        std::string error;
        nlohmann::json result;
    };

    Response submit(const std::string& kind, std::function<nlohmann::json()> work);
    void worker_loop(std::stop_token stop);
    std::optional<int> class_index(const std::string& text) const;

    const LabeledDataset dataset_;
    const ServiceOptions options_;
    const SplitIndices split_;
    std::vector<int> train_counts_;

    mutable std::shared_mutex mutex_;
    std::optional<tsne::EmbeddingResult> embedding_;
    std::vector<int> committed_k_;
    std::vector<int> committed_sub_;  // per dataset row, -1 when not in the committed subdivision
    std::map<std::string, Job> jobs_;
    int next_job_ = 1;

    std::mutex queue_mutex_;
    std::condition_variable_any queue_cv_;
    std::condition_variable_any idle_cv_;
    std::optional<std::pair<std::string, std::function<nlohmann::json()>>> pending_;
    bool busy_ = false;
    std::jthread worker_;
};

/// HTTP binding of a Service. Starts listening on construction and stops on
/// destruction. Port 0 picks a free port.
class HttpServer {
public:
    HttpServer(Service& service, const std::string& host, int port, const std::string& ui_dir = {});
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    int port() const { return port_; }
    /// Blocks until stop() is called from another thread.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace sfm::service
