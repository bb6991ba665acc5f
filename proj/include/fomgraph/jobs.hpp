#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fomgraph/consolidate.hpp"

namespace fomgraph {

enum class JobState { Pending, Running, Succeeded, Failed };

const char* to_string(JobState s);
std::optional<JobState> job_state_from_string(const std::string& s);

struct JobRecord {
    std::string job_id;
    JobState state = JobState::Pending;
    std::string submitted_at;  // ISO 8601 UTC; lexicographic = chronological
    std::string started_at;    // "" until Running
    std::string finished_at;   // "" until terminal
    std::vector<std::string> document_ids;
    ConsolidationOptions options;
    std::string error;       // Failed only
    std::string result_ref;  // Succeeded only; handle for the stored result
};

// Executes one job; a throw means the job Failed with the exception message.
using JobWork = std::function<void(const JobRecord&)>;
// Called after every state transition (submitted / started / succeeded /
// failed / interrupted), outside the manager lock.
using JobObserver = std::function<void(const JobRecord&, const std::string& event)>;

// Bounded worker pool with an on-disk journal (one JSON file per job,
// temp+rename writes). On construction the journal is recovered: jobs that
// were Pending are requeued in submission order; jobs that were Running when
// the process died are marked Failed ("interrupted by service restart").
// Transitions are atomic and follow Pending -> Running -> (Succeeded |
// Failed); terminal states never change.
class JobManager {
public:
    JobManager(std::filesystem::path journal_dir, int max_concurrent, JobWork work,
               JobObserver observer = {});
    ~JobManager();

    // before_queue, when given, runs after the job id is allocated but before
    // the job becomes runnable, so callers can attach per-job context (e.g. a
    // catalog snapshot) race-free. It must not call back into the manager.
    std::string submit(std::vector<std::string> document_ids, ConsolidationOptions options,
                       const std::function<void(const std::string& job_id)>& before_queue = {});

    std::optional<JobRecord> get(const std::string& job_id) const;
    // Consistent snapshot of every job, sorted by (submitted_at, job_id).
    std::vector<JobRecord> list() const;

    // Blocks until the queue is empty, no job is running, and the observer
    // has been told about every finished job.
    void wait_idle();

private:
    void worker_loop();
    void journal_write(const JobRecord& record);
    void recover();
    void notify(const JobRecord& record, const std::string& event);

    std::filesystem::path dir_;
    JobWork work_;
    JobObserver observer_;

    mutable std::mutex mu_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::map<std::string, JobRecord> records_;
    std::deque<std::string> queue_;
    int running_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace fomgraph
