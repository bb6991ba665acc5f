#include "fomgraph/service.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fomgraph/consolidate.hpp"
#include "fomgraph/errors.hpp"
#include "fomgraph/ingest.hpp"
#include "fomgraph/text.hpp"
#include "fomgraph/util.hpp"

namespace fomgraph {

namespace {

using nlohmann::json;

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, json{{"error", message}});
}

json job_to_json(const JobRecord& rec) {
    json j;
    j["job_id"] = rec.job_id;
    j["state"] = to_string(rec.state);
    j["submitted_at"] = rec.submitted_at;
    if (!rec.started_at.empty()) j["started_at"] = rec.started_at;
    if (!rec.finished_at.empty()) j["finished_at"] = rec.finished_at;
    j["document_ids"] = rec.document_ids;
    j["options"] = {{"process_known_materials", rec.options.process_known_materials},
                    {"parallelism", rec.options.parallelism}};
    if (rec.state == JobState::Failed) j["error"] = rec.error;
    if (rec.state == JobState::Succeeded) {
        j["result"] = "/jobs/" + rec.job_id + "/result";
        j["features"] = "/jobs/" + rec.job_id + "/features";
    }
    return j;
}

}  // namespace

Service::Service(ServerConfig cfg, std::ostream* log)
    : cfg_(std::move(cfg)),
      log_(log),
      store_(std::filesystem::path(cfg_.data_dir) / "documents"),
      results_dir_(std::filesystem::path(cfg_.data_dir) / "results") {
    std::filesystem::create_directories(results_dir_);
    mb_ = load_material_base(cfg_.mb_path);

    auto observer = [this](const JobRecord& rec, const std::string& event) {
        json line{{"ts", util::now_iso8601_ms()},
                  {"event", event},
                  {"job_id", rec.job_id},
                  {"state", to_string(rec.state)}};
        if (!rec.error.empty()) line["error"] = rec.error;
        log_line(line.dump());
        if (rec.state == JobState::Succeeded || rec.state == JobState::Failed) {
            std::lock_guard lock(snapshots_mu_);
            job_snapshots_.erase(rec.job_id);
        }
    };
    jobs_ = std::make_unique<JobManager>(std::filesystem::path(cfg_.data_dir) / "jobs",
                                         cfg_.max_concurrent_jobs,
                                         [this](const JobRecord& job) { run_job(job); },
                                         std::move(observer));

    svr_ = std::make_unique<httplib::Server>();
    svr_->set_payload_max_length(cfg_.max_upload_bytes);
    svr_->set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        json line{{"ts", util::now_iso8601_ms()},
                  {"event", "http_request"},
                  {"method", req.method},
                  {"path", req.path},
                  {"status", res.status}};
        std::string job_id = res.get_header_value("X-Job-Id");
        if (job_id.empty() && req.path.rfind("/jobs/", 0) == 0) {
            job_id = req.path.substr(6);
            if (size_t slash = job_id.find('/'); slash != std::string::npos)
                job_id = job_id.substr(0, slash);
        }
        if (!job_id.empty()) line["job_id"] = job_id;
        log_line(line.dump());
    });
    setup_routes();
}

Service::~Service() {
    stop();
    jobs_.reset();  // joins workers before members are torn down
}

MaterialBasePtr Service::current_mb() const {
    std::lock_guard lock(mb_mu_);
    return mb_;
}

MaterialBasePtr Service::snapshot_for_job(const std::string& job_id) const {
    {
        std::lock_guard lock(snapshots_mu_);
        auto it = job_snapshots_.find(job_id);
        if (it != job_snapshots_.end()) return it->second;
    }
    return current_mb();  // jobs recovered from the journal use the startup snapshot
}

void Service::log_line(const std::string& json_line) {
    if (!log_) return;
    std::lock_guard lock(log_mu_);
    *log_ << json_line << "\n";
    log_->flush();
}

void Service::run_job(const JobRecord& job) {
    MaterialBasePtr mb = snapshot_for_job(job.job_id);
    std::vector<AnnotatedDocument> docs;
    docs.reserve(job.document_ids.size());
    for (const auto& id : job.document_ids) docs.push_back(store_.fetch(id));
    PipelineOutput out = run_pipeline(docs, *mb, job.options);

    std::filesystem::path dir = results_dir_ / job.job_id;
    std::filesystem::create_directories(dir);
    util::write_file_atomic(dir / "graph.json", graph_to_json(out.graph));
    util::write_file_atomic(dir / "features.csv", features_to_csv(out.features, mb->catalog()));
    util::write_file_atomic(dir / "features.json", features_to_json(out.features, mb->catalog()));
}

void Service::wait_jobs_idle() { jobs_->wait_idle(); }

bool Service::start() {
    auto hp = util::split_host_port(cfg_.listen_addr);
    if (!hp) throw InvariantViolation("listen_addr must be host:port, got \"" + cfg_.listen_addr +
                                      "\"");
    const auto& [host, port] = *hp;
    if (port == 0) {
        port_ = svr_->bind_to_any_port(host);
        if (port_ < 0) return false;
    } else {
        if (!svr_->bind_to_port(host, port)) return false;
        port_ = port;
    }
    listen_thread_ = std::thread([this] { svr_->listen_after_bind(); });
    svr_->wait_until_ready();
    return true;
}

void Service::stop() {
    if (svr_) svr_->stop();
    if (listen_thread_.joinable()) listen_thread_.join();
}

void Service::setup_routes() {
    svr_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200,
                   json{{"status", "ok"},
                        {"documents", store_.size()},
                        {"jobs", jobs_->list().size()}});
    });

    svr_->Post("/documents", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data())
            return reply_error(res, 400, "expected a multipart/form-data upload");
        const httplib::MultipartFormData* file = nullptr;
        for (const auto& [key, part] : req.files)
            if (!part.filename.empty()) {
                file = &part;
                break;
            }
        if (!file && !req.files.empty()) file = &req.files.begin()->second;
        if (!file) return reply_error(res, 400, "no file part in the upload");

        std::string overwrite_param = req.get_param_value("overwrite");
        bool overwrite = overwrite_param == "true" || overwrite_param == "1";

        bool is_zip = text::ends_with_icase(file->filename, ".zip") ||
                      (file->content.size() >= 4 && file->content.compare(0, 4, "PK\x03\x04") == 0);

        std::vector<AnnotatedDocument> docs;
        IngestReport report;
        if (is_zip) {
            try {
                std::tie(docs, report) = parse_archive(file->content);
            } catch (const std::exception& e) {
                return reply_error(res, 400, e.what());
            }
            report.accepted.clear();
        } else {
            try {
                docs.push_back(parse_document(file->content, file->filename));
            } catch (const std::exception& e) {
                return reply_error(res, 400, e.what());
            }
        }

        json warnings = json::array();
        std::vector<std::string> accepted;
        for (const auto& doc : docs) {
            if (!store_.put(doc, overwrite)) {
                std::string reason = "DuplicateDocId: \"" + doc.doc_id +
                                     "\" already exists (pass overwrite=true to replace)";
                if (!is_zip) return reply_error(res, 409, reason);
                report.rejected.emplace_back(doc.source_filename, reason);
                continue;
            }
            accepted.push_back(doc.doc_id);
            if (doc.empty_warning)
                warnings.push_back("document \"" + doc.doc_id + "\" contains zero tables");
        }

        json rejected = json::array();
        for (const auto& [filename, reason] : report.rejected)
            rejected.push_back(json{{"filename", filename}, {"reason", reason}});
        reply_json(res, 200,
                   json{{"accepted", accepted}, {"rejected", rejected}, {"warnings", warnings}});
    });

    svr_->Get("/documents", [this](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, json{{"documents", store_.ids()}});
    });

    svr_->Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error&) {
            return reply_error(res, 400, "request body must be JSON");
        }
        if (!body.is_object()) return reply_error(res, 400, "request body must be a JSON object");

        std::vector<std::string> ids;
        const json& jids = body.contains("document_ids") ? body["document_ids"] : json();
        if (jids.is_string() && jids.get<std::string>() == "all") {
            ids = store_.ids();
        } else if (jids.is_array()) {
            for (const auto& v : jids) {
                if (!v.is_string())
                    return reply_error(res, 422, "document_ids must be strings or \"all\"");
                ids.push_back(v.get<std::string>());
            }
        } else {
            return reply_error(res, 422, "document_ids must be an array of ids or \"all\"");
        }
        if (ids.empty()) return reply_error(res, 422, "document_ids resolves to zero documents");
        for (const auto& id : ids)
            if (!store_.has(id)) return reply_error(res, 404, "unknown document id: " + id);

        ConsolidationOptions options;
        if (body.contains("options")) {
            const json& jo = body["options"];
            if (!jo.is_object()) return reply_error(res, 422, "options must be an object");
            for (const auto& [key, value] : jo.items()) {
                if (key == "process_known_materials" && value.is_boolean())
                    options.process_known_materials = value.get<bool>();
                else if (key == "parallelism" && value.is_number_integer() &&
                         value.get<int>() >= 1)
                    options.parallelism = value.get<int>();
                else
                    return reply_error(res, 422, "invalid option: " + key);
            }
        }

        MaterialBasePtr snapshot = current_mb();
        std::string job_id = jobs_->submit(std::move(ids), options, [&](const std::string& id) {
            std::lock_guard lock(snapshots_mu_);
            job_snapshots_[id] = snapshot;
        });
        res.set_header("X-Job-Id", job_id);
        reply_json(res, 202, json{{"job_id", job_id}, {"state", "pending"}});
    });

    svr_->Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
        json arr = json::array();
        for (const auto& rec : jobs_->list()) arr.push_back(job_to_json(rec));
        reply_json(res, 200, json{{"jobs", arr}});
    });

    svr_->Get("/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
        auto rec = jobs_->get(req.path_params.at("id"));
        if (!rec) return reply_error(res, 404, "unknown job: " + req.path_params.at("id"));
        reply_json(res, 200, job_to_json(*rec));
    });

    auto serve_result_file = [this](const httplib::Request& req, httplib::Response& res,
                                    const std::string& filename, const std::string& content_type) {
        const std::string& id = req.path_params.at("id");
        auto rec = jobs_->get(id);
        if (!rec) return reply_error(res, 404, "unknown job: " + id);
        if (rec->state != JobState::Succeeded)
            return reply_error(res, 409, "job is " + std::string(to_string(rec->state)) +
                                             ", result not available");
        std::filesystem::path path = results_dir_ / rec->result_ref / filename;
        std::string bytes;
        try {
            bytes = util::read_file(path);
        } catch (const std::exception& e) {
            return reply_error(res, 500, e.what());
        }
        res.status = 200;
        res.set_content(bytes, content_type);
    };

    svr_->Get("/jobs/:id/result",
              [serve_result_file](const httplib::Request& req, httplib::Response& res) {
                  serve_result_file(req, res, "graph.json", "application/json");
              });

    svr_->Get("/jobs/:id/features",
              [serve_result_file](const httplib::Request& req, httplib::Response& res) {
                  std::string format = req.has_param("format") ? req.get_param_value("format")
                                                               : std::string("csv");
                  if (format == "csv")
                      serve_result_file(req, res, "features.csv", "text/csv");
                  else if (format == "json")
                      serve_result_file(req, res, "features.json", "application/json");
                  else
                      reply_error(res, 400, "format must be csv or json");
              });

    svr_->Get("/knowledge", [this](const httplib::Request& req, httplib::Response& res) {
        size_t limit = 100, offset = 0;
        std::vector<std::pair<std::string, std::string>> params;
        for (const auto& [key, value] : req.params) {
            if (key == "limit" || key == "offset") {
                try {
                    (key == "limit" ? limit : offset) = std::stoul(value);
                } catch (const std::exception&) {
                    return reply_error(res, 400, key + " must be a non-negative integer");
                }
            } else {
                params.emplace_back(key, value);
            }
        }
        QueryFilter filter;
        try {
            filter = QueryFilter::from_params(params);
        } catch (const FilterError& e) {
            return reply_error(res, 400, e.what());
        }

        MaterialBasePtr mb = current_mb();
        std::vector<MeasurementRecord> all;
        for (const auto& rec : jobs_->list()) {
            if (rec.state != JobState::Succeeded) continue;
            std::filesystem::path path = results_dir_ / rec.result_ref / "graph.json";
            KnowledgeGraph graph;
            try {
                graph = graph_from_json(util::read_file(path));
            } catch (const std::exception&) {
                continue;  // a missing result never breaks the query endpoint
            }
            auto matched = query_records(graph, filter, *mb);
            std::move(matched.begin(), matched.end(), std::back_inserter(all));
        }
        // The union over jobs: identical records from re-runs collapse.
        std::sort(all.begin(), all.end(), [](const MeasurementRecord& a,
                                             const MeasurementRecord& b) {
            return std::tie(a.provenance.doc_id, a.provenance.table_index, a.provenance.row,
                            a.provenance.col, a.fom_id, a.material_id, a.value) <
                   std::tie(b.provenance.doc_id, b.provenance.table_index, b.provenance.row,
                            b.provenance.col, b.fom_id, b.material_id, b.value);
        });
        all.erase(std::unique(all.begin(), all.end()), all.end());

        size_t total = all.size();
        size_t from = std::min(offset, total);
        size_t to = std::min(from + limit, total);
        std::vector<MeasurementRecord> page(all.begin() + from, all.begin() + to);
        json body{{"total", total}, {"offset", offset}, {"limit", limit}};
        body["records"] = json::parse(measurements_to_json_array(page));
        reply_json(res, 200, body);
    });

    svr_->Post("/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
        MaterialBasePtr fresh;
        try {
            fresh = load_material_base(cfg_.mb_path);
        } catch (const std::exception& e) {
            return reply_error(res, 500, std::string("reload failed, keeping old snapshot: ") +
                                             e.what());
        }
        {
            std::lock_guard lock(mb_mu_);
            mb_ = fresh;
        }
        reply_json(res, 200,
                   json{{"status", "reloaded"},
                        {"materials", fresh->materials().size()},
                        {"foms", fresh->catalog().definitions().size()}});
    });
}

}  // namespace fomgraph
