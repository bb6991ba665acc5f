#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fomgraph/catalog.hpp"
#include "fomgraph/ingest.hpp"

namespace fomgraph {

struct ConsolidationOptions {
    // The literal decision-tree behavior: a table whose resolved materials are
    // all reference-table entries is skipped wholesale. Set to true to process
    // such tables anyway.
    bool process_known_materials = false;
    int parallelism = 1;

    bool operator==(const ConsolidationOptions&) const = default;
};

struct Provenance {
    std::string doc_id;
    int table_index = -1;
    int row = -1;  // -1 = not tied to a body row (header- or table-level)
    int col = -1;  // -1 = not tied to a column

    bool operator==(const Provenance&) const = default;
};

enum class Novelty { New, ConfirmsReference };

struct MeasurementRecord {
    std::string material_id;  // canonical material name
    std::string fom_id;
    double value = 0.0;
    std::optional<double> uncertainty;
    std::string unit;  // header unit when present, else the FoM's canonical unit
    std::map<std::string, double> state_variables;  // temperature_k / pressure_bar / ph
    Provenance provenance;
    Novelty novelty = Novelty::New;

    bool operator==(const MeasurementRecord&) const = default;
};

namespace skip_reason {
inline constexpr const char* kUnresolvedMaterial = "UnresolvedMaterial";
inline constexpr const char* kTableSkippedKnownMaterials = "TableSkippedKnownMaterials";
inline constexpr const char* kUnmatchedHeader = "UnmatchedHeader";
inline constexpr const char* kUnparseableCell = "UnparseableCell";
inline constexpr const char* kFeatureCollision = "FeatureCollision";
}  // namespace skip_reason

struct SkipEntry {
    Provenance provenance;
    std::string reason;  // one of the skip_reason codes
    std::string detail;

    bool operator==(const SkipEntry&) const = default;
};

struct KnowledgeGraph {
    std::vector<std::string> material_nodes;  // sorted canonical names
    std::vector<std::string> fom_nodes;       // sorted fom_ids with at least one edge
    std::vector<std::string> document_nodes;  // sorted doc_ids of the input corpus
    std::vector<MeasurementRecord> measurements;  // sorted by (doc, table, row, col)
    std::vector<SkipEntry> skip_log;

    bool operator==(const KnowledgeGraph&) const = default;
};

struct FeatureVector {
    std::string material_id;
    std::vector<double> values;  // one slot per non-state-variable catalog field
    std::vector<bool> mask;      // values[i] meaningful iff mask[i]
    std::vector<bool> category_onehot;  // TechnologyCategory enum order, size 5
};

struct TableConsolidation {
    std::vector<MeasurementRecord> records;
    std::vector<SkipEntry> skips;
    // Canonical names resolved in this table, sorted unique; empty when the
    // table was skipped by the reference gate. These become material nodes.
    std::vector<std::string> resolved_materials;
};

// The decision tree over one table. Total: every anomaly is a skip entry,
// never an exception.
TableConsolidation consolidate_table(const AnnotatedTable& table, const std::string& doc_id,
                                     const MaterialBase& mb, const ConsolidationOptions& options);

// Consolidates every table of every document (options.parallelism-way) and
// assembles the graph. Parallel and serial runs produce identical graphs.
KnowledgeGraph consolidate_corpus(const std::vector<AnnotatedDocument>& documents,
                                  const MaterialBase& mb, const ConsolidationOptions& options);

// One vector per material node, slots in catalog order over the non-state
// value fields. Multiple edges for one (material, fom) slot are averaged and
// the collision is noted in graph.skip_log.
std::vector<FeatureVector> encode_features(KnowledgeGraph& graph, const MaterialBase& mb);

struct QueryFilter {
    std::optional<TechnologyCategory> category;
    std::optional<std::string> material;
    std::optional<std::string> fom_id;
    std::optional<double> min_value;
    std::optional<double> max_value;

    // Accepts keys category, material, fom, min_value, max_value. Throws
    // FilterError on an unknown key or an unparseable value.
    static QueryFilter from_params(const std::vector<std::pair<std::string, std::string>>& params);
};

// Conjunctive filter over the graph's measurements, in stable provenance
// order. A category matches when the FoM's category or the material's
// category list contains it.
std::vector<MeasurementRecord> query_records(const KnowledgeGraph& graph,
                                             const QueryFilter& filter, const MaterialBase& mb);

// Deterministic serialization: identical graphs yield identical bytes, and
// graph_from_json(graph_to_json(g)) == g.
std::string graph_to_json(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json(const std::string& text);

// Dumped JSON array of records, element shape identical to the entries of
// graph_to_json's "measurements".
std::string measurements_to_json_array(const std::vector<MeasurementRecord>& records);

// Feature-vector exports. CSV column order: material_id, then fom_ids in
// catalog order, then one 0/1 column per technology category.
std::string features_to_csv(const std::vector<FeatureVector>& features, const FomCatalog& catalog);
std::string features_to_json(const std::vector<FeatureVector>& features,
                             const FomCatalog& catalog);

struct PipelineOutput {
    KnowledgeGraph graph;
    std::vector<FeatureVector> features;
};

// consolidate_corpus + encode_features, the shared path behind both the
// service job runner and the offline CLI.
PipelineOutput run_pipeline(const std::vector<AnnotatedDocument>& documents,
                            const MaterialBase& mb, const ConsolidationOptions& options);

}  // namespace fomgraph
