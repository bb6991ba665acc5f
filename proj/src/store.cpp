#include "fomgraph/store.hpp"

#include <stdexcept>

#include "fomgraph/util.hpp"

namespace fomgraph {

DocumentStore::DocumentStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        try {
            AnnotatedDocument doc =
                parse_document(util::read_file(entry.path()), entry.path().filename().string());
            index_[doc.doc_id] = entry.path();
        } catch (const std::exception&) {
            // A damaged file never hides healthy ones; it is simply not indexed.
        }
    }
}

bool DocumentStore::put(const AnnotatedDocument& doc, bool overwrite) {
    std::lock_guard lock(mu_);
    auto it = index_.find(doc.doc_id);
    if (it != index_.end() && !overwrite) return false;
    std::filesystem::path path = dir_ / (util::safe_filename(doc.doc_id) + ".json");
    util::write_file_atomic(path, serialize_document(doc));
    index_[doc.doc_id] = path;
    return true;
}

bool DocumentStore::has(const std::string& doc_id) const {
    std::lock_guard lock(mu_);
    return index_.count(doc_id) > 0;
}

std::vector<std::string> DocumentStore::ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [id, path] : index_) out.push_back(id);
    return out;
}

size_t DocumentStore::size() const {
    std::lock_guard lock(mu_);
    return index_.size();
}

AnnotatedDocument DocumentStore::fetch(const std::string& doc_id) const {
    std::filesystem::path path;
    {
        std::lock_guard lock(mu_);
        auto it = index_.find(doc_id);
        if (it == index_.end()) throw std::runtime_error("unknown document: " + doc_id);
        path = it->second;
    }
    return parse_document(util::read_file(path), path.filename().string());
}

}  // namespace fomgraph
