#include "fomgraph/consolidate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fomgraph/errors.hpp"
#include "fomgraph/matcher.hpp"
#include "fomgraph/text.hpp"

namespace fomgraph {

namespace {

using nlohmann::json;

auto provenance_key(const Provenance& p) {
    return std::tie(p.doc_id, p.table_index, p.row, p.col);
}

Provenance at(const std::string& doc_id, int table, int row, int col) {
    return Provenance{doc_id, table, row, col};
}

}  // namespace

TableConsolidation consolidate_table(const AnnotatedTable& table, const std::string& doc_id,
                                     const MaterialBase& mb, const ConsolidationOptions& options) {
    TableConsolidation out;
    const FomCatalog& catalog = mb.catalog();
    const int t = table.table_index;

    // (1) resolve the material column.
    std::vector<const MaterialRecord*> row_material(table.body.size(), nullptr);
    bool any_resolved = false;
    bool all_reference = true;
    for (size_t r = 0; r < table.body.size(); ++r) {
        const std::string& cell = table.body[r][0];
        const MaterialRecord* m = mb.lookup_material(cell);
        row_material[r] = m;
        if (!m) {
            out.skips.push_back({at(doc_id, t, static_cast<int>(r), 0),
                                 skip_reason::kUnresolvedMaterial, cell});
        } else {
            any_resolved = true;
            if (!m->is_reference_entry()) all_reference = false;
        }
    }

    // (2) "if all entries contain Materials that are in the reference table,
    // get the next table."
    if (any_resolved && all_reference && !options.process_known_materials) {
        out.skips.push_back({at(doc_id, t, -1, -1), skip_reason::kTableSkippedKnownMaterials,
                             "all resolved materials are reference-table entries"});
        return out;
    }

    std::set<std::string> resolved;
    for (const auto* m : row_material)
        if (m) resolved.insert(m->canonical_name);
    out.resolved_materials.assign(resolved.begin(), resolved.end());

    // (3) match each header column to a catalog FoM.
    struct Column {
        const FomDefinition* fom = nullptr;
        std::optional<std::string> unit;
    };
    std::vector<Column> columns(table.n_cols());
    for (size_t j = 1; j < table.n_cols(); ++j) {
        HeaderAnalysis h = analyze_header(table.header_row[j], catalog.species_dictionary());
        const FomDefinition* fom = nullptr;
        if (h.species_found.empty()) {
            fom = catalog.fom_by_exact_name(h.stripped_text);
        } else if (h.species_found.size() == 1) {
            auto candidates = catalog.foms_containing_species(h.species_found[0]);
            const FomDefinition* named = catalog.fom_by_exact_name(h.stripped_text);
            bool named_is_candidate =
                named && std::find(candidates.begin(), candidates.end(), named) != candidates.end();
            if (named_is_candidate) {
                fom = named;  // the header names one candidate outright
            } else if (!candidates.empty()) {
                fom = candidates.front();  // "the system selects the first": min catalog_position
            } else {
                fom = named;  // species used by no FoM; an exact name can still hit
            }
        } else {
            std::set<std::string> species(h.species_found.begin(), h.species_found.end());
            fom = catalog.fom_by_species_set(species);
        }
        if (!fom) {
            out.skips.push_back({at(doc_id, t, -1, static_cast<int>(j)),
                                 skip_reason::kUnmatchedHeader, table.header_row[j]});
            continue;
        }
        columns[j] = {fom, h.unit};
    }

    // (4) + (5) walk resolved rows: state variables first, then values.
    for (size_t r = 0; r < table.body.size(); ++r) {
        const MaterialRecord* m = row_material[r];
        if (!m) continue;

        std::map<std::string, double> state;
        for (size_t j = 1; j < table.n_cols(); ++j) {
            const Column& c = columns[j];
            if (!c.fom || !c.fom->is_state_variable) continue;
            if (auto pv = parse_numeric_cell(table.body[r][j])) state[c.fom->fom_id] = pv->value;
        }

        for (size_t j = 1; j < table.n_cols(); ++j) {
            const Column& c = columns[j];
            if (!c.fom || c.fom->is_state_variable) continue;
            auto pv = parse_numeric_cell(table.body[r][j]);
            if (!pv) {
                out.skips.push_back({at(doc_id, t, static_cast<int>(r), static_cast<int>(j)),
                                     skip_reason::kUnparseableCell, table.body[r][j]});
                continue;
            }
            MeasurementRecord rec;
            rec.material_id = m->canonical_name;
            rec.fom_id = c.fom->fom_id;
            rec.value = pv->value;
            rec.uncertainty = pv->uncertainty;
            rec.unit = c.unit ? *c.unit : c.fom->canonical_unit;
            rec.state_variables = state;
            rec.provenance = at(doc_id, t, static_cast<int>(r), static_cast<int>(j));
            rec.novelty = mb.reference_has_value(m->canonical_name, c.fom->fom_id)
                              ? Novelty::ConfirmsReference
                              : Novelty::New;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

KnowledgeGraph consolidate_corpus(const std::vector<AnnotatedDocument>& documents,
                                  const MaterialBase& mb, const ConsolidationOptions& options) {
    struct Unit {
        size_t doc;
        size_t table;
    };
    std::vector<Unit> units;
    for (size_t d = 0; d < documents.size(); ++d)
        for (size_t t = 0; t < documents[d].tables.size(); ++t) units.push_back({d, t});

    // Each unit writes into its own slot, so the merge below is identical no
    // matter how the workers interleave.
    std::vector<TableConsolidation> results(units.size());
    auto run_unit = [&](size_t i) {
        const auto& doc = documents[units[i].doc];
        results[i] = consolidate_table(doc.tables[units[i].table], doc.doc_id, mb, options);
    };
    size_t workers = std::min<size_t>(std::max(1, options.parallelism), units.size());
    if (workers <= 1) {
        for (size_t i = 0; i < units.size(); ++i) run_unit(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (size_t i; (i = next.fetch_add(1)) < units.size();) run_unit(i);
            });
        for (auto& th : pool) th.join();
    }

    KnowledgeGraph g;
    std::set<std::string> materials, foms, doc_ids;
    for (const auto& doc : documents) doc_ids.insert(doc.doc_id);
    for (auto& res : results) {
        materials.insert(res.resolved_materials.begin(), res.resolved_materials.end());
        for (auto& rec : res.records) foms.insert(rec.fom_id);
        std::move(res.records.begin(), res.records.end(), std::back_inserter(g.measurements));
        std::move(res.skips.begin(), res.skips.end(), std::back_inserter(g.skip_log));
    }
    g.material_nodes.assign(materials.begin(), materials.end());
    g.fom_nodes.assign(foms.begin(), foms.end());
    g.document_nodes.assign(doc_ids.begin(), doc_ids.end());

    std::sort(g.measurements.begin(), g.measurements.end(),
              [](const MeasurementRecord& a, const MeasurementRecord& b) {
                  return provenance_key(a.provenance) < provenance_key(b.provenance);
              });
    std::sort(g.skip_log.begin(), g.skip_log.end(), [](const SkipEntry& a, const SkipEntry& b) {
        return std::tie(a.provenance.doc_id, a.provenance.table_index, a.provenance.row,
                        a.provenance.col, a.reason, a.detail) <
               std::tie(b.provenance.doc_id, b.provenance.table_index, b.provenance.row,
                        b.provenance.col, b.reason, b.detail);
    });
    return g;
}

std::vector<FeatureVector> encode_features(KnowledgeGraph& graph, const MaterialBase& mb) {
    auto fields = mb.catalog().value_fields();
    std::unordered_map<std::string, size_t> slot_of;
    for (size_t i = 0; i < fields.size(); ++i) slot_of[fields[i]->fom_id] = i;

    // material -> slot -> values, in deterministic (sorted) order throughout.
    std::map<std::string, std::map<size_t, std::vector<double>>> gathered;
    for (const auto& rec : graph.measurements) {
        auto it = slot_of.find(rec.fom_id);
        if (it == slot_of.end()) continue;  // graph built against another catalog
        gathered[rec.material_id][it->second].push_back(rec.value);
    }

    std::vector<FeatureVector> out;
    out.reserve(graph.material_nodes.size());
    for (const auto& name : graph.material_nodes) {
        FeatureVector fv;
        fv.material_id = name;
        fv.values.assign(fields.size(), 0.0);
        fv.mask.assign(fields.size(), false);
        fv.category_onehot.assign(kTechnologyCategoryCount, false);
        if (const MaterialRecord* m = mb.lookup_material(name))
            for (auto cat : m->categories) fv.category_onehot[static_cast<size_t>(cat)] = true;
        if (auto it = gathered.find(name); it != gathered.end()) {
            for (const auto& [slot, values] : it->second) {
                double sum = 0.0;
                for (double v : values) sum += v;
                fv.values[slot] = sum / static_cast<double>(values.size());
                fv.mask[slot] = true;
                if (values.size() > 1)
                    graph.skip_log.push_back(
                        {Provenance{"", -1, -1, -1}, skip_reason::kFeatureCollision,
                         name + "/" + fields[slot]->fom_id + ": " +
                             std::to_string(values.size()) + " values averaged"});
            }
        }
        out.push_back(std::move(fv));
    }
    return out;
}

QueryFilter QueryFilter::from_params(
    const std::vector<std::pair<std::string, std::string>>& params) {
    QueryFilter f;
    for (const auto& [key, value] : params) {
        if (key == "category") {
            auto cat = technology_category_from_string(value);
            if (!cat) throw FilterError("unknown category: " + value);
            f.category = *cat;
        } else if (key == "material") {
            f.material = value;
        } else if (key == "fom") {
            f.fom_id = value;
        } else if (key == "min_value" || key == "max_value") {
            double d = 0.0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
            if (ec != std::errc() || ptr != value.data() + value.size())
                throw FilterError("not a number for " + key + ": " + value);
            (key == "min_value" ? f.min_value : f.max_value) = d;
        } else {
            throw FilterError("unknown filter key: " + key);
        }
    }
    return f;
}

std::vector<MeasurementRecord> query_records(const KnowledgeGraph& graph,
                                             const QueryFilter& filter, const MaterialBase& mb) {
    std::optional<std::string> want_material;
    if (filter.material) {
        if (const MaterialRecord* m = mb.lookup_material(*filter.material))
            want_material = m->canonical_name;
        else
            want_material = text::normalize_key(*filter.material);
    }

    std::vector<MeasurementRecord> out;
    for (const auto& rec : graph.measurements) {
        if (filter.fom_id && rec.fom_id != *filter.fom_id) continue;
        if (want_material && rec.material_id != *want_material &&
            text::normalize_key(rec.material_id) != *want_material)
            continue;
        if (filter.min_value && rec.value < *filter.min_value) continue;
        if (filter.max_value && rec.value > *filter.max_value) continue;
        if (filter.category) {
            const char* want = to_string(*filter.category);
            const FomDefinition* fom = mb.catalog().fom_by_id(rec.fom_id);
            bool matches = fom && std::string(to_string(fom->category)) == want;
            if (!matches) {
                if (const MaterialRecord* m = mb.lookup_material(rec.material_id))
                    matches = std::find(m->categories.begin(), m->categories.end(),
                                        *filter.category) != m->categories.end();
            }
            if (!matches) continue;
        }
        out.push_back(rec);
    }
    return out;
}

namespace {

json provenance_to_json(const Provenance& p) {
    return json{{"doc", p.doc_id}, {"table", p.table_index}, {"row", p.row}, {"col", p.col}};
}

Provenance provenance_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaViolation(where + ": expected an object");
    Provenance p;
    try {
        p.doc_id = j.at("doc").get<std::string>();
        p.table_index = j.at("table").get<int>();
        p.row = j.at("row").get<int>();
        p.col = j.at("col").get<int>();
    } catch (const json::exception& e) {
        throw SchemaViolation(where + ": " + e.what());
    }
    return p;
}

json measurement_to_json(const MeasurementRecord& rec) {
    json jr;
    jr["material"] = rec.material_id;
    jr["fom"] = rec.fom_id;
    jr["value"] = rec.value;
    jr["uncertainty"] = rec.uncertainty ? json(*rec.uncertainty) : json(nullptr);
    jr["unit"] = rec.unit;
    jr["state"] = json(rec.state_variables);
    jr["provenance"] = provenance_to_json(rec.provenance);
    jr["novelty"] = rec.novelty == Novelty::New ? "new" : "confirms_reference";
    return jr;
}

}  // namespace

std::string graph_to_json(const KnowledgeGraph& graph) {
    json root;
    root["materials"] = graph.material_nodes;
    root["foms"] = graph.fom_nodes;
    root["documents"] = graph.document_nodes;
    root["measurements"] = json::array();
    for (const auto& rec : graph.measurements) root["measurements"].push_back(measurement_to_json(rec));
    root["skips"] = json::array();
    for (const auto& s : graph.skip_log) {
        root["skips"].push_back(json{{"provenance", provenance_to_json(s.provenance)},
                                     {"reason", s.reason},
                                     {"detail", s.detail}});
    }
    return root.dump(2) + "\n";
}

KnowledgeGraph graph_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedJson(std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaViolation("graph: expected a JSON object");

    KnowledgeGraph g;
    try {
        g.material_nodes = root.at("materials").get<std::vector<std::string>>();
        g.fom_nodes = root.at("foms").get<std::vector<std::string>>();
        g.document_nodes = root.at("documents").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("graph nodes: ") + e.what());
    }

    const json& measurements = root.value("measurements", json::array());
    for (size_t i = 0; i < measurements.size(); ++i) {
        std::string where = "measurements[" + std::to_string(i) + "]";
        const json& jr = measurements[i];
        if (!jr.is_object()) throw SchemaViolation(where + ": expected an object");
        MeasurementRecord rec;
        try {
            rec.material_id = jr.at("material").get<std::string>();
            rec.fom_id = jr.at("fom").get<std::string>();
            rec.value = jr.at("value").get<double>();
            if (!jr.at("uncertainty").is_null())
                rec.uncertainty = jr.at("uncertainty").get<double>();
            rec.unit = jr.at("unit").get<std::string>();
            rec.state_variables = jr.at("state").get<std::map<std::string, double>>();
            std::string novelty = jr.at("novelty").get<std::string>();
            if (novelty == "new")
                rec.novelty = Novelty::New;
            else if (novelty == "confirms_reference")
                rec.novelty = Novelty::ConfirmsReference;
            else
                throw SchemaViolation(where + ".novelty: unknown value \"" + novelty + "\"");
        } catch (const json::exception& e) {
            throw SchemaViolation(where + ": " + e.what());
        }
        rec.provenance = provenance_from_json(jr.at("provenance"), where + ".provenance");
        g.measurements.push_back(std::move(rec));
    }

    const json& skips = root.value("skips", json::array());
    for (size_t i = 0; i < skips.size(); ++i) {
        std::string where = "skips[" + std::to_string(i) + "]";
        const json& js = skips[i];
        if (!js.is_object()) throw SchemaViolation(where + ": expected an object");
        SkipEntry s;
        try {
            s.reason = js.at("reason").get<std::string>();
            s.detail = js.at("detail").get<std::string>();
        } catch (const json::exception& e) {
            throw SchemaViolation(where + ": " + e.what());
        }
        s.provenance = provenance_from_json(js.at("provenance"), where + ".provenance");
        g.skip_log.push_back(std::move(s));
    }
    return g;
}

std::string measurements_to_json_array(const std::vector<MeasurementRecord>& records) {
    json arr = json::array();
    for (const auto& rec : records) arr.push_back(measurement_to_json(rec));
    return arr.dump(2);
}

namespace {

std::string format_number(double v) { return json(v).dump(); }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string features_to_csv(const std::vector<FeatureVector>& features,
                            const FomCatalog& catalog) {
    auto fields = catalog.value_fields();
    std::string out = "material_id";
    for (const auto* f : fields) out += "," + f->fom_id;
    for (int c = 0; c < kTechnologyCategoryCount; ++c)
        out += std::string(",category_") + to_string(static_cast<TechnologyCategory>(c));
    out += "\n";
    for (const auto& fv : features) {
        out += csv_escape(fv.material_id);
        for (size_t i = 0; i < fields.size(); ++i) {
            out += ",";
            if (i < fv.mask.size() && fv.mask[i]) out += format_number(fv.values[i]);
        }
        for (int c = 0; c < kTechnologyCategoryCount; ++c)
            out += fv.category_onehot[c] ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

std::string features_to_json(const std::vector<FeatureVector>& features,
                             const FomCatalog& catalog) {
    auto fields = catalog.value_fields();
    json root = json::array();
    for (const auto& fv : features) {
        json jf;
        jf["material"] = fv.material_id;
        json values = json::object();
        for (size_t i = 0; i < fields.size(); ++i)
            if (i < fv.mask.size() && fv.mask[i]) values[fields[i]->fom_id] = fv.values[i];
        jf["values"] = std::move(values);
        json cats = json::array();
        for (int c = 0; c < kTechnologyCategoryCount; ++c)
            if (fv.category_onehot[c]) cats.push_back(to_string(static_cast<TechnologyCategory>(c)));
        jf["categories"] = std::move(cats);
        root.push_back(std::move(jf));
    }
    return root.dump(2) + "\n";
}

PipelineOutput run_pipeline(const std::vector<AnnotatedDocument>& documents,
                            const MaterialBase& mb, const ConsolidationOptions& options) {
    PipelineOutput out;
    out.graph = consolidate_corpus(documents, mb, options);
    out.features = encode_features(out.graph, mb);
    return out;
}

}  // namespace fomgraph
