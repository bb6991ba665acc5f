#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

namespace fomgraph::util {

// Reads a whole file; throws std::runtime_error naming the path on failure.
std::string read_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

// "2026-08-18T12:34:56.789Z". Lexicographic order equals chronological order.
std::string format_iso8601_ms(std::chrono::system_clock::time_point tp);
std::string now_iso8601_ms();

// Random version-4 UUID, lowercase hex.
std::string new_uuid();

// "host:port" -> (host, port); nullopt when the port is missing or not a
// number. A bare ":8080" means any-interface host "0.0.0.0".
std::optional<std::pair<std::string, int>> split_host_port(const std::string& addr);

// Encodes a string into a filesystem-safe name: [A-Za-z0-9._-] kept, every
// other byte becomes %XX. Injective, so distinct ids never collide on disk.
std::string safe_filename(const std::string& s);

}  // namespace fomgraph::util
