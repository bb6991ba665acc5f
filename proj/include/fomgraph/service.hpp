#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>

#include "fomgraph/catalog.hpp"
#include "fomgraph/config.hpp"
#include "fomgraph/jobs.hpp"
#include "fomgraph/store.hpp"

namespace httplib {
class Server;
}

namespace fomgraph {

// The REST service: document upload, asynchronous consolidation jobs, result
// download, and knowledge queries. Construction loads the MB snapshot and
// recovers the document store and job journal from data_dir; start() binds
// the socket (port 0 picks an ephemeral one) and serves on a background
// thread.
class Service {
public:
    // log, when given, receives one JSON object per line for requests and job
    // transitions.
    explicit Service(ServerConfig cfg, std::ostream* log = nullptr);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    bool start();
    void stop();

    int port() const { return port_; }
    const ServerConfig& config() const { return cfg_; }

    // Test helper: blocks until the job queue drains.
    void wait_jobs_idle();

private:
    void setup_routes();
    void run_job(const JobRecord& job);
    MaterialBasePtr current_mb() const;
    MaterialBasePtr snapshot_for_job(const std::string& job_id) const;
    void log_line(const std::string& json_line);

    ServerConfig cfg_;
    std::ostream* log_ = nullptr;
    std::mutex log_mu_;

    MaterialBasePtr mb_;
    mutable std::mutex mb_mu_;

    DocumentStore store_;
    std::filesystem::path results_dir_;

    mutable std::mutex snapshots_mu_;
    std::unordered_map<std::string, MaterialBasePtr> job_snapshots_;

    std::unique_ptr<JobManager> jobs_;
    std::unique_ptr<httplib::Server> svr_;
    std::thread listen_thread_;
    int port_ = 0;
};

}  // namespace fomgraph
