#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace fomgraph {

struct ServerConfig {
    std::string listen_addr = "127.0.0.1:8080";
    std::string data_dir = "data";  // documents/, jobs/, results/ live under it
    std::string mb_path;            // required to serve
    int max_concurrent_jobs = 2;
    size_t max_upload_bytes = 64 * 1024 * 1024;
};

// Layered configuration: built-in defaults, then the optional JSON config
// file (keys listen_addr, data_dir, mb_path, max_concurrent_jobs,
// max_upload_bytes), then environment variables LISTEN_ADDR, DATA_DIR,
// MB_PATH, MAX_CONCURRENT_JOBS, MAX_UPLOAD_BYTES. Command-line flags are
// applied on top by the caller. Throws MalformedFile / SchemaViolation on a
// bad config file, InvariantViolation on a bad environment value.
ServerConfig load_server_config(const std::optional<std::string>& config_file);

}  // namespace fomgraph
