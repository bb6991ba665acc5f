#include "fomgraph/ingest.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "fomgraph/errors.hpp"
#include "fomgraph/text.hpp"
#include "fomgraph/ziparchive.hpp"

namespace fomgraph {

namespace {

using nlohmann::json;

std::string doc_id_from_filename(const std::string& filename) {
    size_t slash = filename.find_last_of("/\\");
    std::string base = slash == std::string::npos ? filename : filename.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaViolation(where + ": missing required key \"" + key + "\"");
    return *it;
}

std::string str_field(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string())
        throw SchemaViolation(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

}  // namespace

AnnotatedDocument parse_document(const std::string& bytes, const std::string& filename) {
    json root;
    try {
        root = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw MalformedJson(std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaViolation("document: expected a JSON object");

    AnnotatedDocument doc;
    doc.source_filename = filename;
    if (auto it = root.find("doc_id"); it != root.end()) {
        if (!it->is_string()) throw SchemaViolation("doc_id: expected a string");
        doc.doc_id = it->get<std::string>();
    }
    if (doc.doc_id.empty()) doc.doc_id = doc_id_from_filename(filename);
    if (doc.doc_id.empty())
        throw SchemaViolation("doc_id: empty and no filename to derive one from");

    const json& tables = require(root, "tables", "document");
    if (!tables.is_array()) throw SchemaViolation("tables: expected an array");
    doc.empty_warning = tables.empty();

    for (size_t t = 0; t < tables.size(); ++t) {
        std::string where = "tables[" + std::to_string(t) + "]";
        const json& jt = tables[t];
        if (!jt.is_object()) throw SchemaViolation(where + ": expected an object");

        AnnotatedTable table;
        const json& idx = require(jt, "table_index", where);
        if (!idx.is_number_integer())
            throw SchemaViolation(where + ".table_index: expected an integer");
        table.table_index = idx.get<int>();
        if (table.table_index != static_cast<int>(t))
            throw SchemaViolation(where + ".table_index: expected " + std::to_string(t) +
                                  " (indices must be contiguous from 0), got " +
                                  std::to_string(table.table_index));
        table.caption = str_field(jt, "caption", where);

        const json& header = require(jt, "header_row", where);
        if (!header.is_array()) throw SchemaViolation(where + ".header_row: expected an array");
        for (size_t c = 0; c < header.size(); ++c) {
            if (!header[c].is_string())
                throw SchemaViolation(where + ".header_row[" + std::to_string(c) +
                                      "]: expected a string");
            table.header_row.push_back(header[c].get<std::string>());
        }
        if (table.header_row.empty())
            throw SchemaViolation(where + ".header_row: a table needs at least one column");
        size_t n_cols = table.header_row.size();

        const json& body = require(jt, "body", where);
        if (!body.is_array()) throw SchemaViolation(where + ".body: expected an array");
        for (size_t r = 0; r < body.size(); ++r) {
            std::string row_where = where + ".body[" + std::to_string(r) + "]";
            const json& jrow = body[r];
            if (!jrow.is_array()) throw SchemaViolation(row_where + ": expected an array");
            if (jrow.size() != n_cols)
                throw SchemaViolation(row_where + ": expected " + std::to_string(n_cols) +
                                      " cells, got " + std::to_string(jrow.size()));
            std::vector<std::string> row;
            for (size_t c = 0; c < jrow.size(); ++c) {
                if (!jrow[c].is_string())
                    throw SchemaViolation(row_where + "[" + std::to_string(c) +
                                          "]: expected a string");
                row.push_back(jrow[c].get<std::string>());
            }
            table.body.push_back(std::move(row));
        }
        doc.tables.push_back(std::move(table));
    }
    return doc;
}

std::string serialize_document(const AnnotatedDocument& doc) {
    json root;
    root["doc_id"] = doc.doc_id;
    root["tables"] = json::array();
    for (const auto& t : doc.tables) {
        json jt;
        jt["table_index"] = t.table_index;
        jt["caption"] = t.caption;
        jt["header_row"] = t.header_row;
        jt["body"] = t.body;
        root["tables"].push_back(std::move(jt));
    }
    return root.dump(2) + "\n";
}

std::pair<std::vector<AnnotatedDocument>, IngestReport> parse_archive(const std::string& bytes) {
    std::vector<zip::Entry> entries = zip::read_archive(bytes);
    if (entries.empty()) throw EmptyArchive();
    std::sort(entries.begin(), entries.end(),
              [](const zip::Entry& a, const zip::Entry& b) { return a.name < b.name; });

    std::vector<AnnotatedDocument> docs;
    IngestReport report;
    for (const auto& e : entries) {
        if (text::ends_with_icase(e.name, ".pdf")) {
            report.rejected.emplace_back(e.name, "UnsupportedFormat: pdf conversion not bundled");
            continue;
        }
        if (!text::ends_with_icase(e.name, ".json")) {
            report.rejected.emplace_back(e.name, "UnsupportedFormat: expected a .json member");
            continue;
        }
        try {
            AnnotatedDocument doc = parse_document(e.bytes, e.name);
            report.accepted.push_back(doc.doc_id);
            docs.push_back(std::move(doc));
        } catch (const std::exception& ex) {
            report.rejected.emplace_back(e.name, ex.what());
        }
    }
    return {std::move(docs), std::move(report)};
}

}  // namespace fomgraph
