#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fomgraph/ingest.hpp"

namespace fomgraph {

// Disk-backed document store. The index (which ids exist) lives in memory and
// is rebuilt from the directory at startup; document bodies are read from
// disk on fetch, so stored documents survive restarts and a vanished file is
// noticed by the job that needs it, not hidden by a stale cache.
class DocumentStore {
public:
    explicit DocumentStore(std::filesystem::path dir);

    // False when doc_id already exists and overwrite is not set.
    bool put(const AnnotatedDocument& doc, bool overwrite);

    bool has(const std::string& doc_id) const;
    std::vector<std::string> ids() const;  // sorted
    size_t size() const;

    // Reads and parses the stored document; throws when the file is missing
    // or unreadable.
    AnnotatedDocument fetch(const std::string& doc_id) const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::filesystem::path> index_;  // doc_id -> file
};

}  // namespace fomgraph
