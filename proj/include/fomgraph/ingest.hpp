#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fomgraph {

struct AnnotatedTable {
    int table_index = 0;
    std::string caption;
    std::vector<std::string> header_row;
    std::vector<std::vector<std::string>> body;

    size_t n_cols() const { return header_row.size(); }
    bool operator==(const AnnotatedTable&) const = default;
};

struct AnnotatedDocument {
    std::string doc_id;
    std::string source_filename;
    std::vector<AnnotatedTable> tables;
    // Set when the document carried zero tables — accepted, but worth telling
    // the uploader about.
    bool empty_warning = false;

    bool operator==(const AnnotatedDocument& o) const {
        return doc_id == o.doc_id && tables == o.tables;
    }
};

struct IngestReport {
    std::vector<std::string> accepted;                            // doc_ids
    std::vector<std::pair<std::string, std::string>> rejected;    // (filename, reason)
};

// Parses one annotated-table JSON document. `filename` supplies the doc_id
// fallback (basename minus extension) when the JSON carries none, and is kept
// as source_filename. Throws MalformedJson / SchemaViolation with
// position-precise messages; a document with zero tables is accepted with
// empty_warning set.
AnnotatedDocument parse_document(const std::string& bytes, const std::string& filename);

// Canonical JSON serialization; parse_document(serialize_document(d)) == d.
std::string serialize_document(const AnnotatedDocument& doc);

// Parses every .json member of a zip archive (suffix match is
// case-insensitive), in lexicographic member-name order. One bad member is
// reported in the IngestReport, never aborts the batch. Throws NotAnArchive /
// EmptyArchive for whole-archive problems.
std::pair<std::vector<AnnotatedDocument>, IngestReport> parse_archive(const std::string& bytes);

}  // namespace fomgraph
