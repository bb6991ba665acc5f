// fomgraph — command-line client for the figure-of-merit knowledge service.
//
// Online subcommands (upload/consolidate/status/download/query) talk to a
// running server; `run` executes the same pipeline fully offline; `serve`
// hosts the server. Exit codes: 0 ok, 2 usage, 3 cannot reach server,
// 4 server-reported error, 5 job failed.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fomgraph/catalog.hpp"
#include "fomgraph/config.hpp"
#include "fomgraph/consolidate.hpp"
#include "fomgraph/ingest.hpp"
#include "fomgraph/service.hpp"
#include "fomgraph/text.hpp"
#include "fomgraph/util.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNetwork = 3;
constexpr int kServerError = 4;
constexpr int kJobFailed = 5;

using nlohmann::json;

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }

httplib::Client make_client(const std::string& server) {
    httplib::Client cli(server);
    cli.set_connection_timeout(std::chrono::seconds(5));
    cli.set_read_timeout(std::chrono::seconds(120));
    cli.set_write_timeout(std::chrono::seconds(120));
    return cli;
}

// Prints the body and translates the outcome into an exit code.
int finish(const httplib::Result& res, bool quiet_body = false) {
    if (!res) {
        std::cerr << "error: cannot reach server: " << httplib::to_string(res.error()) << "\n";
        return kNetwork;
    }
    if (!quiet_body && !res->body.empty()) std::cout << res->body;
    if (res->status >= 400) {
        std::cerr << "error: server returned HTTP " << res->status << "\n";
        return kServerError;
    }
    return kOk;
}

int cmd_upload(const std::string& server, const std::string& path, bool overwrite) {
    std::string bytes;
    try {
        bytes = fomgraph::util::read_file(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    std::string filename = std::filesystem::path(path).filename().string();
    std::string content_type =
        fomgraph::text::ends_with_icase(filename, ".zip") ? "application/zip" : "application/json";
    httplib::MultipartFormDataItems items = {{"file", bytes, filename, content_type}};
    auto cli = make_client(server);
    std::string target = overwrite ? "/documents?overwrite=true" : "/documents";
    return finish(cli.Post(target, items));
}

int poll_until_done(httplib::Client& cli, const std::string& job_id, int poll_interval_ms) {
    std::string last_state;
    for (;;) {
        auto res = cli.Get("/jobs/" + job_id);
        if (!res) {
            std::cerr << "error: cannot reach server: " << httplib::to_string(res.error()) << "\n";
            return kNetwork;
        }
        if (res->status >= 400) {
            std::cerr << res->body;
            std::cerr << "error: server returned HTTP " << res->status << "\n";
            return kServerError;
        }
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded() || !body.contains("state")) {
            std::cerr << "error: malformed status document\n";
            return kServerError;
        }
        std::string state = body["state"].get<std::string>();
        if (state != last_state) {
            std::cerr << "job " << job_id << ": " << state << "\n";
            last_state = state;
        }
        if (state == "succeeded") {
            std::cout << res->body;
            return kOk;
        }
        if (state == "failed") {
            std::cout << res->body;
            std::cerr << "error: job failed: " << body.value("error", std::string()) << "\n";
            return kJobFailed;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(poll_interval_ms));
    }
}

int cmd_consolidate(const std::string& server, const std::vector<std::string>& ids, bool all,
                    bool wait, int poll_interval_ms, bool process_known, int parallelism) {
    json body;
    if (all)
        body["document_ids"] = "all";
    else
        body["document_ids"] = ids;
    body["options"] = {{"process_known_materials", process_known}, {"parallelism", parallelism}};

    auto cli = make_client(server);
    auto res = cli.Post("/jobs", body.dump(), "application/json");
    if (!res) {
        std::cerr << "error: cannot reach server: " << httplib::to_string(res.error()) << "\n";
        return kNetwork;
    }
    if (res->status >= 400) {
        std::cout << res->body;
        std::cerr << "error: server returned HTTP " << res->status << "\n";
        return kServerError;
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("job_id")) {
        std::cerr << "error: malformed submission reply\n";
        return kServerError;
    }
    std::string job_id = reply["job_id"].get<std::string>();
    if (!wait) {
        std::cout << res->body;
        return kOk;
    }
    return poll_until_done(cli, job_id, poll_interval_ms);
}

int cmd_status(const std::string& server, const std::string& job_id) {
    auto cli = make_client(server);
    return finish(cli.Get("/jobs/" + job_id));
}

int cmd_download(const std::string& server, const std::string& job_id,
                 const std::string& out_dir) {
    auto cli = make_client(server);
    std::filesystem::create_directories(out_dir);
    struct Part {
        const char* path_suffix;
        const char* filename;
    };
    const Part parts[] = {{"/result", "graph.json"},
                          {"/features?format=csv", "features.csv"},
                          {"/features?format=json", "features.json"}};
    for (const auto& part : parts) {
        auto res = cli.Get("/jobs/" + job_id + part.path_suffix);
        if (!res) {
            std::cerr << "error: cannot reach server: " << httplib::to_string(res.error()) << "\n";
            return kNetwork;
        }
        if (res->status >= 400) {
            std::cerr << res->body;
            std::cerr << "error: server returned HTTP " << res->status << "\n";
            return kServerError;
        }
        std::filesystem::path out = std::filesystem::path(out_dir) / part.filename;
        fomgraph::util::write_file_atomic(out, res->body);
        std::cerr << "wrote " << out.string() << "\n";
    }
    return kOk;
}

int cmd_query(const std::string& server, const std::vector<std::string>& filters,
              std::optional<int> limit, std::optional<int> offset) {
    httplib::Params params;
    for (const auto& f : filters) {
        size_t eq = f.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --filter expects key=value, got \"" << f << "\"\n";
            return kUsage;
        }
        params.emplace(f.substr(0, eq), f.substr(eq + 1));
    }
    if (limit) params.emplace("limit", std::to_string(*limit));
    if (offset) params.emplace("offset", std::to_string(*offset));
    auto cli = make_client(server);
    return finish(cli.Get(httplib::append_query_params("/knowledge", params)));
}

int cmd_run(const std::string& corpus_path, const std::string& mb_path, const std::string& out_dir,
            bool process_known, int parallelism) {
    using namespace fomgraph;
    try {
        MaterialBasePtr mb = load_material_base(mb_path);

        std::string bytes = util::read_file(corpus_path);
        std::vector<AnnotatedDocument> docs;
        if (text::ends_with_icase(corpus_path, ".zip") ||
            (bytes.size() >= 4 && bytes.compare(0, 4, "PK\x03\x04") == 0)) {
            auto [parsed, report] = parse_archive(bytes);
            docs = std::move(parsed);
            for (const auto& [filename, reason] : report.rejected)
                std::cerr << "rejected member " << filename << ": " << reason << "\n";
        } else {
            docs.push_back(
                parse_document(bytes, std::filesystem::path(corpus_path).filename().string()));
        }

        ConsolidationOptions options;
        options.process_known_materials = process_known;
        options.parallelism = parallelism;
        PipelineOutput out = run_pipeline(docs, *mb, options);

        std::filesystem::create_directories(out_dir);
        std::filesystem::path dir(out_dir);
        util::write_file_atomic(dir / "graph.json", graph_to_json(out.graph));
        util::write_file_atomic(dir / "features.csv", features_to_csv(out.features, mb->catalog()));
        util::write_file_atomic(dir / "features.json",
                                features_to_json(out.features, mb->catalog()));

        json summary{{"documents", docs.size()},
                     {"materials", out.graph.material_nodes.size()},
                     {"measurements", out.graph.measurements.size()},
                     {"skips", out.graph.skip_log.size()},
                     {"output", dir.string()}};
        std::cout << summary.dump(2) << "\n";
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kJobFailed;
    }
}

int cmd_serve(const std::optional<std::string>& config_file,
              const std::optional<std::string>& listen, const std::optional<std::string>& data_dir,
              const std::optional<std::string>& mb, std::optional<int> max_jobs,
              std::optional<size_t> max_upload) {
    using namespace fomgraph;
    try {
        ServerConfig cfg = load_server_config(config_file);
        if (listen) cfg.listen_addr = *listen;
        if (data_dir) cfg.data_dir = *data_dir;
        if (mb) cfg.mb_path = *mb;
        if (max_jobs) cfg.max_concurrent_jobs = *max_jobs;
        if (max_upload) cfg.max_upload_bytes = *max_upload;
        if (cfg.mb_path.empty()) {
            std::cerr << "error: no MB file configured (pass --mb, set MB_PATH, or use a config "
                         "file)\n";
            return kUsage;
        }
        if (cfg.max_concurrent_jobs < 1) {
            std::cerr << "error: --max-jobs must be at least 1\n";
            return kUsage;
        }

        Service service(std::move(cfg), &std::cout);
        if (!service.start()) {
            std::cerr << "error: cannot bind " << service.config().listen_addr << "\n";
            return kUsage;
        }
        std::cout << json{{"ts", util::now_iso8601_ms()},
                          {"event", "listening"},
                          {"port", service.port()}}
                         .dump()
                  << std::endl;

        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        std::cout << json{{"ts", util::now_iso8601_ms()}, {"event", "shutting_down"}}.dump()
                  << std::endl;
        service.stop();
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carbon-capture figure-of-merit knowledge service client"};
    app.require_subcommand(1);

    std::string server = "http://127.0.0.1:8080";
    if (const char* env = std::getenv("FOMGRAPH_SERVER")) server = env;
    int poll_interval_ms = 200;
    bool offline = false;
    app.add_option("--server", server, "Server base URL")->capture_default_str();
    app.add_option("--poll-interval", poll_interval_ms, "Polling interval in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--offline", offline, "Run without a server (only valid with 'run')");

    // serve
    auto* serve = app.add_subcommand("serve", "Host the REST service");
    std::string cfg_file, listen, data_dir, mb_path;
    int max_jobs = 0;
    size_t max_upload = 0;
    auto* opt_cfg = serve->add_option("--config", cfg_file, "JSON config file");
    auto* opt_listen = serve->add_option("--listen", listen, "host:port to bind");
    auto* opt_data = serve->add_option("--data-dir", data_dir, "State directory");
    auto* opt_mb = serve->add_option("--mb", mb_path, "MB JSON file");
    auto* opt_jobs = serve->add_option("--max-jobs", max_jobs, "Concurrent job limit");
    auto* opt_upload = serve->add_option("--max-upload", max_upload, "Upload size limit, bytes");

    // upload
    auto* upload = app.add_subcommand("upload", "Upload a .json document or a .zip corpus");
    std::string upload_path;
    bool overwrite = false;
    upload->add_option("path", upload_path, "File to upload")->required();
    upload->add_flag("--overwrite", overwrite, "Replace documents with the same doc_id");

    // consolidate
    auto* consolidate = app.add_subcommand("consolidate", "Submit a consolidation job");
    std::vector<std::string> doc_ids;
    bool all = false, wait = false, process_known = false;
    int parallelism = 1;
    consolidate->add_option("doc_ids", doc_ids, "Document ids to consolidate");
    consolidate->add_flag("--all", all, "Consolidate every uploaded document");
    consolidate->add_flag("--wait", wait, "Poll until the job finishes");
    consolidate->add_flag("--process-known-materials", process_known,
                          "Also process tables whose materials are all reference entries");
    consolidate->add_option("--parallelism", parallelism, "Worker threads inside the job")
        ->check(CLI::PositiveNumber);

    // status
    auto* status = app.add_subcommand("status", "Show a job's status document");
    std::string status_id;
    status->add_option("job_id", status_id, "Job id")->required();

    // download
    auto* download = app.add_subcommand("download", "Download a finished job's results");
    std::string dl_id, dl_out = ".";
    download->add_option("job_id", dl_id, "Job id")->required();
    download->add_option("out_dir", dl_out, "Output directory");
    download->add_option("--output", dl_out, "Output directory");

    // query
    auto* query = app.add_subcommand("query", "Query consolidated knowledge");
    std::vector<std::string> filters;
    std::optional<int> q_limit, q_offset;
    query->add_option("--filter", filters, "Repeatable key=value filter "
                                           "(category/material/fom/min_value/max_value)");
    int q_limit_v = 0, q_offset_v = 0;
    auto* opt_limit = query->add_option("--limit", q_limit_v, "Page size");
    auto* opt_offset = query->add_option("--offset", q_offset_v, "Page start");

    // run (offline)
    auto* run = app.add_subcommand("run", "Run the pipeline offline: corpus + MB -> output dir");
    std::string run_corpus, run_mb, run_out;
    bool run_known = false;
    int run_parallelism = 1;
    run->add_option("corpus", run_corpus, ".json document or .zip corpus")->required();
    run->add_option("mb", run_mb, "MB JSON file")->required();
    run->add_option("out_dir", run_out, "Output directory")->required();
    run->add_flag("--process-known-materials", run_known,
                  "Also process tables whose materials are all reference entries");
    run->add_option("--parallelism", run_parallelism, "Worker threads")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (offline && !run->parsed() && !serve->parsed()) {
        std::cerr << "error: --offline only applies to the 'run' subcommand\n";
        return kUsage;
    }

    if (serve->parsed())
        return cmd_serve(opt_cfg->count() ? std::optional(cfg_file) : std::nullopt,
                         opt_listen->count() ? std::optional(listen) : std::nullopt,
                         opt_data->count() ? std::optional(data_dir) : std::nullopt,
                         opt_mb->count() ? std::optional(mb_path) : std::nullopt,
                         opt_jobs->count() ? std::optional(max_jobs) : std::nullopt,
                         opt_upload->count() ? std::optional(max_upload) : std::nullopt);
    if (upload->parsed()) return cmd_upload(server, upload_path, overwrite);
    if (consolidate->parsed()) {
        if (!all && doc_ids.empty()) {
            std::cerr << "error: pass document ids or --all\n";
            return kUsage;
        }
        return cmd_consolidate(server, doc_ids, all, wait, poll_interval_ms, process_known,
                               parallelism);
    }
    if (status->parsed()) return cmd_status(server, status_id);
    if (download->parsed()) return cmd_download(server, dl_id, dl_out);
    if (query->parsed()) {
        if (opt_limit->count()) q_limit = q_limit_v;
        if (opt_offset->count()) q_offset = q_offset_v;
        return cmd_query(server, filters, q_limit, q_offset);
    }
    if (run->parsed()) return cmd_run(run_corpus, run_mb, run_out, run_known, run_parallelism);

    std::cerr << "error: no subcommand\n";
    return kUsage;
}
