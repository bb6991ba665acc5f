#include "fomgraph/config.hpp"

#include <charconv>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "fomgraph/errors.hpp"
#include "fomgraph/util.hpp"

namespace fomgraph {

namespace {

using nlohmann::json;

template <typename T>
T parse_integer(const std::string& value, const std::string& what) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw InvariantViolation(what + " must be an integer, got \"" + value + "\"");
    return out;
}

void apply_file(ServerConfig& cfg, const std::string& path) {
    json root;
    try {
        root = json::parse(util::read_file(path));
    } catch (const json::parse_error& e) {
        throw MalformedFile("config file " + path + ": " + e.what());
    }
    if (!root.is_object()) throw SchemaViolation("config file " + path + ": expected an object");
    for (const auto& [key, value] : root.items()) {
        try {
            if (key == "listen_addr")
                cfg.listen_addr = value.get<std::string>();
            else if (key == "data_dir")
                cfg.data_dir = value.get<std::string>();
            else if (key == "mb_path")
                cfg.mb_path = value.get<std::string>();
            else if (key == "max_concurrent_jobs")
                cfg.max_concurrent_jobs = value.get<int>();
            else if (key == "max_upload_bytes")
                cfg.max_upload_bytes = value.get<size_t>();
            else
                throw SchemaViolation("config file " + path + ": unknown key \"" + key + "\"");
        } catch (const json::exception& e) {
            throw SchemaViolation("config file " + path + "." + key + ": " + e.what());
        }
    }
}

void apply_env(ServerConfig& cfg) {
    if (const char* v = std::getenv("LISTEN_ADDR")) cfg.listen_addr = v;
    if (const char* v = std::getenv("DATA_DIR")) cfg.data_dir = v;
    if (const char* v = std::getenv("MB_PATH")) cfg.mb_path = v;
    if (const char* v = std::getenv("MAX_CONCURRENT_JOBS"))
        cfg.max_concurrent_jobs = parse_integer<int>(v, "MAX_CONCURRENT_JOBS");
    if (const char* v = std::getenv("MAX_UPLOAD_BYTES"))
        cfg.max_upload_bytes = parse_integer<size_t>(v, "MAX_UPLOAD_BYTES");
}

}  // namespace

ServerConfig load_server_config(const std::optional<std::string>& config_file) {
    ServerConfig cfg;
    if (config_file) apply_file(cfg, *config_file);
    apply_env(cfg);
    if (cfg.max_concurrent_jobs < 1)
        throw InvariantViolation("max_concurrent_jobs must be at least 1");
    return cfg;
}

}  // namespace fomgraph
