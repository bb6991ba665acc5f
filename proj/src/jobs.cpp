#include "fomgraph/jobs.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "fomgraph/util.hpp"

namespace fomgraph {

namespace {

using nlohmann::json;

json record_to_json(const JobRecord& r) {
    json j;
    j["job_id"] = r.job_id;
    j["state"] = to_string(r.state);
    j["submitted_at"] = r.submitted_at;
    j["started_at"] = r.started_at;
    j["finished_at"] = r.finished_at;
    j["document_ids"] = r.document_ids;
    j["options"] = {{"process_known_materials", r.options.process_known_materials},
                    {"parallelism", r.options.parallelism}};
    j["error"] = r.error;
    j["result_ref"] = r.result_ref;
    return j;
}

std::optional<JobRecord> record_from_json(const json& j) {
    JobRecord r;
    try {
        r.job_id = j.at("job_id").get<std::string>();
        auto state = job_state_from_string(j.at("state").get<std::string>());
        if (!state) return std::nullopt;
        r.state = *state;
        r.submitted_at = j.at("submitted_at").get<std::string>();
        r.started_at = j.at("started_at").get<std::string>();
        r.finished_at = j.at("finished_at").get<std::string>();
        r.document_ids = j.at("document_ids").get<std::vector<std::string>>();
        r.options.process_known_materials =
            j.at("options").at("process_known_materials").get<bool>();
        r.options.parallelism = j.at("options").at("parallelism").get<int>();
        r.error = j.at("error").get<std::string>();
        r.result_ref = j.at("result_ref").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return r;
}

}  // namespace

const char* to_string(JobState s) {
    switch (s) {
        case JobState::Pending: return "pending";
        case JobState::Running: return "running";
        case JobState::Succeeded: return "succeeded";
        case JobState::Failed: return "failed";
    }
    return "pending";
}

std::optional<JobState> job_state_from_string(const std::string& s) {
    if (s == "pending") return JobState::Pending;
    if (s == "running") return JobState::Running;
    if (s == "succeeded") return JobState::Succeeded;
    if (s == "failed") return JobState::Failed;
    return std::nullopt;
}

JobManager::JobManager(std::filesystem::path journal_dir, int max_concurrent, JobWork work,
                       JobObserver observer)
    : dir_(std::move(journal_dir)), work_(std::move(work)), observer_(std::move(observer)) {
    std::filesystem::create_directories(dir_);
    recover();
    int n = std::max(1, max_concurrent);
    workers_.reserve(n);
    for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) w.join();
}

void JobManager::recover() {
    std::vector<JobRecord> pending;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::optional<JobRecord> rec;
        try {
            rec = record_from_json(json::parse(util::read_file(entry.path())));
        } catch (const std::exception&) {
            rec = std::nullopt;
        }
        if (!rec) continue;  // unreadable journal entry; leave the file alone
        if (rec->state == JobState::Running) {
            rec->state = JobState::Failed;
            rec->error = "interrupted by service restart";
            rec->finished_at = util::now_iso8601_ms();
            journal_write(*rec);
            notify(*rec, "job_interrupted");
        }
        if (rec->state == JobState::Pending) pending.push_back(*rec);
        records_[rec->job_id] = std::move(*rec);
    }
    std::sort(pending.begin(), pending.end(), [](const JobRecord& a, const JobRecord& b) {
        return std::tie(a.submitted_at, a.job_id) < std::tie(b.submitted_at, b.job_id);
    });
    for (const auto& rec : pending) queue_.push_back(rec.job_id);
}

void JobManager::journal_write(const JobRecord& record) {
    util::write_file_atomic(dir_ / (record.job_id + ".json"), record_to_json(record).dump(2) + "\n");
}

void JobManager::notify(const JobRecord& record, const std::string& event) {
    if (observer_) observer_(record, event);
}

std::string JobManager::submit(std::vector<std::string> document_ids, ConsolidationOptions options,
                               const std::function<void(const std::string&)>& before_queue) {
    JobRecord rec;
    rec.job_id = util::new_uuid();
    rec.state = JobState::Pending;
    rec.submitted_at = util::now_iso8601_ms();
    rec.document_ids = std::move(document_ids);
    rec.options = options;
    if (before_queue) before_queue(rec.job_id);
    {
        std::lock_guard lock(mu_);
        journal_write(rec);
        records_[rec.job_id] = rec;
        queue_.push_back(rec.job_id);
    }
    queue_cv_.notify_one();
    notify(rec, "job_submitted");
    return rec.job_id;
}

std::optional<JobRecord> JobManager::get(const std::string& job_id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(job_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<JobRecord> JobManager::list() const {
    std::lock_guard lock(mu_);
    std::vector<JobRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, rec] : records_) out.push_back(rec);
    std::sort(out.begin(), out.end(), [](const JobRecord& a, const JobRecord& b) {
        return std::tie(a.submitted_at, a.job_id) < std::tie(b.submitted_at, b.job_id);
    });
    return out;
}

void JobManager::wait_idle() {
    std::unique_lock lock(mu_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void JobManager::worker_loop() {
    for (;;) {
        JobRecord job;
        {
            std::unique_lock lock(mu_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;  // pending jobs stay journaled for the next start
            std::string id = queue_.front();
            queue_.pop_front();
            JobRecord& rec = records_.at(id);
            rec.state = JobState::Running;
            rec.started_at = util::now_iso8601_ms();
            journal_write(rec);
            job = rec;
            ++running_;
        }
        notify(job, "job_started");

        std::string error;
        try {
            work_(job);
        } catch (const std::exception& e) {
            error = e.what();
            if (error.empty()) error = "job failed";
        } catch (...) {
            error = "job failed";
        }

        JobRecord finished;
        {
            std::lock_guard lock(mu_);
            JobRecord& rec = records_.at(job.job_id);
            rec.finished_at = util::now_iso8601_ms();
            if (error.empty()) {
                rec.state = JobState::Succeeded;
                rec.result_ref = rec.job_id;
            } else {
                rec.state = JobState::Failed;
                rec.error = error;
            }
            journal_write(rec);
            finished = rec;
        }
        // Deliver the terminal notification before releasing the worker slot,
        // so wait_idle() implies that observers have seen every finished job.
        notify(finished, error.empty() ? "job_succeeded" : "job_failed");
        {
            std::lock_guard lock(mu_);
            --running_;
        }
        idle_cv_.notify_all();
    }
}

}  // namespace fomgraph
