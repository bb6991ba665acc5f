#include "fomgraph/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fomgraph/text.hpp"

namespace fomgraph {

using nlohmann::json;

const char* to_string(TechnologyCategory c) {
    switch (c) {
        case TechnologyCategory::LiquidAbsorption: return "LiquidAbsorption";
        case TechnologyCategory::SolidAdsorption: return "SolidAdsorption";
        case TechnologyCategory::Membrane: return "Membrane";
        case TechnologyCategory::Hydrate: return "Hydrate";
        case TechnologyCategory::ChemicalLooping: return "ChemicalLooping";
    }
    return "?";
}

const char* to_string(FomCategory c) {
    switch (c) {
        case FomCategory::Common: return "Common";
        case FomCategory::LiquidAbsorption: return "LiquidAbsorption";
        case FomCategory::SolidAdsorption: return "SolidAdsorption";
        case FomCategory::Membrane: return "Membrane";
        case FomCategory::Hydrate: return "Hydrate";
        case FomCategory::ChemicalLooping: return "ChemicalLooping";
    }
    return "?";
}

std::optional<TechnologyCategory> technology_category_from_string(const std::string& s) {
    if (s == "LiquidAbsorption") return TechnologyCategory::LiquidAbsorption;
    if (s == "SolidAdsorption") return TechnologyCategory::SolidAdsorption;
    if (s == "Membrane") return TechnologyCategory::Membrane;
    if (s == "Hydrate") return TechnologyCategory::Hydrate;
    if (s == "ChemicalLooping") return TechnologyCategory::ChemicalLooping;
    return std::nullopt;
}

std::optional<FomCategory> fom_category_from_string(const std::string& s) {
    if (s == "Common") return FomCategory::Common;
    if (auto t = technology_category_from_string(s)) {
        switch (*t) {
            case TechnologyCategory::LiquidAbsorption: return FomCategory::LiquidAbsorption;
            case TechnologyCategory::SolidAdsorption: return FomCategory::SolidAdsorption;
            case TechnologyCategory::Membrane: return FomCategory::Membrane;
            case TechnologyCategory::Hydrate: return FomCategory::Hydrate;
            case TechnologyCategory::ChemicalLooping: return FomCategory::ChemicalLooping;
        }
    }
    return std::nullopt;
}

bool FomDefinition::has_species(const std::string& symbol) const {
    return std::find(species.begin(), species.end(), symbol) != species.end();
}

FomCatalog::FomCatalog(std::vector<FomDefinition> definitions,
                       std::map<std::string, std::vector<std::string>> species_dictionary)
    : definitions_(std::move(definitions)), species_dictionary_(std::move(species_dictionary)) {
    for (int i = 0; i < static_cast<int>(definitions_.size()); ++i) {
        FomDefinition& def = definitions_[i];
        def.catalog_position = i;
        by_id_.emplace(def.fom_id, i);
        by_name_.emplace(text::normalize_key(def.display_name), i);
        for (const auto& syn : def.synonyms) {
            by_name_.emplace(text::normalize_key(syn), i);
        }
        for (const auto& sp : def.species) {
            by_species_[sp].push_back(i);
        }
        if (def.species.size() >= 2) {
            by_species_set_.emplace(std::set<std::string>(def.species.begin(), def.species.end()),
                                    i);
        }
    }
}

const FomDefinition* FomCatalog::fom_by_id(const std::string& fom_id) const {
    auto it = by_id_.find(fom_id);
    return it == by_id_.end() ? nullptr : &definitions_[it->second];
}

const FomDefinition* FomCatalog::fom_by_exact_name(const std::string& header_text) const {
    std::string key = text::normalize_key(header_text);
    if (key.empty()) return nullptr;
    auto it = by_name_.find(key);
    return it == by_name_.end() ? nullptr : &definitions_[it->second];
}

std::vector<const FomDefinition*> FomCatalog::foms_containing_species(
    const std::string& symbol) const {
    if (!species_dictionary_.count(symbol)) throw UnknownSpecies(symbol);
    std::vector<const FomDefinition*> out;
    auto it = by_species_.find(symbol);
    if (it == by_species_.end()) return out;
    for (int i : it->second) out.push_back(&definitions_[i]);
    std::sort(out.begin(), out.end(), [](const FomDefinition* a, const FomDefinition* b) {
        return a->catalog_position < b->catalog_position;
    });
    return out;
}

const FomDefinition* FomCatalog::fom_by_species_set(const std::set<std::string>& species) const {
    if (species.size() < 2) {
        throw std::logic_error("fom_by_species_set requires at least two species");
    }
    auto it = by_species_set_.find(species);
    return it == by_species_set_.end() ? nullptr : &definitions_[it->second];
}

CatalogGroupCounts FomCatalog::group_counts() const {
    CatalogGroupCounts c;
    for (const auto& def : definitions_) {
        switch (def.category) {
            case FomCategory::Common: ++c.common; break;
            case FomCategory::LiquidAbsorption:
            case FomCategory::SolidAdsorption: ++c.sorption; break;
            case FomCategory::Hydrate: ++c.hydrate; break;
            case FomCategory::Membrane: ++c.membrane; break;
            case FomCategory::ChemicalLooping: ++c.chemical_looping; break;
        }
    }
    return c;
}

std::vector<const FomDefinition*> FomCatalog::value_fields() const {
    std::vector<const FomDefinition*> out;
    for (const auto& def : definitions_) {
        if (!def.is_state_variable) out.push_back(&def);
    }
    return out;
}

MaterialBase::MaterialBase(std::vector<MaterialRecord> materials, FomCatalog catalog,
                           int declared_reference_count)
    : materials_(std::move(materials)),
      catalog_(std::move(catalog)),
      reference_entry_count_(declared_reference_count) {
    for (int i = 0; i < static_cast<int>(materials_.size()); ++i) {
        by_name_.emplace(text::normalize_key(materials_[i].canonical_name), i);
        for (const auto& syn : materials_[i].synonyms) {
            by_name_.emplace(text::normalize_key(syn), i);
        }
    }
}

const MaterialRecord* MaterialBase::lookup_material(const std::string& name) const {
    std::string key = text::normalize_key(name);
    if (key.empty()) return nullptr;
    auto it = by_name_.find(key);
    return it == by_name_.end() ? nullptr : &materials_[it->second];
}

bool MaterialBase::is_reference_entry(const std::string& canonical_name) const {
    const MaterialRecord* m = lookup_material(canonical_name);
    return m && m->is_reference_entry();
}

bool MaterialBase::reference_has_value(const std::string& canonical_name,
                                       const std::string& fom_id) const {
    const MaterialRecord* m = lookup_material(canonical_name);
    return m && m->fom_values.count(fom_id) > 0;
}

std::vector<const MaterialRecord*> MaterialBase::reference_entries() const {
    std::vector<const MaterialRecord*> out;
    for (const auto& m : materials_) {
        if (m.is_reference_entry()) out.push_back(&m);
    }
    return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& detail) {
    throw SchemaViolation(where + ": " + detail);
}

std::string require_string(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) schema_error(where, "missing key \"" + key + "\"");
    if (!j[key].is_string()) schema_error(where + "." + key, "expected a string");
    return j[key].get<std::string>();
}

const json& require_array(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) schema_error(where, "missing key \"" + key + "\"");
    if (!j[key].is_array()) schema_error(where + "." + key, "expected an array");
    return j[key];
}

std::vector<std::string> string_list(const json& arr, const std::string& where) {
    std::vector<std::string> out;
    for (size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_string())
            schema_error(where + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(arr[i].get<std::string>());
    }
    return out;
}

FomDefinition parse_fom(const json& j, const std::string& where) {
    if (!j.is_object()) schema_error(where, "expected an object");
    FomDefinition def;
    def.fom_id = require_string(j, where, "fom_id");
    def.display_name = require_string(j, where, "display_name");
    if (j.contains("synonyms")) def.synonyms = string_list(require_array(j, where, "synonyms"), where + ".synonyms");
    def.canonical_unit = j.value("canonical_unit", std::string());
    std::string cat = require_string(j, where, "category");
    auto parsed = fom_category_from_string(cat);
    if (!parsed) schema_error(where + ".category", "unknown category \"" + cat + "\"");
    def.category = *parsed;
    if (j.contains("species")) def.species = string_list(require_array(j, where, "species"), where + ".species");
    if (j.contains("is_state_variable")) {
        if (!j["is_state_variable"].is_boolean())
            schema_error(where + ".is_state_variable", "expected a boolean");
        def.is_state_variable = j["is_state_variable"].get<bool>();
    }
    if (def.fom_id.empty()) schema_error(where + ".fom_id", "must be non-empty");
    if (def.display_name.empty()) schema_error(where + ".display_name", "must be non-empty");
    return def;
}

ScalarMeasurement parse_scalar(const json& j, const std::string& where) {
    ScalarMeasurement m;
    if (j.is_number()) {
        m.value = j.get<double>();
        return m;
    }
    if (j.is_object()) {
        if (!j.contains("value") || !j["value"].is_number())
            schema_error(where, "expected numeric \"value\"");
        m.value = j["value"].get<double>();
        if (j.contains("uncertainty") && !j["uncertainty"].is_null()) {
            if (!j["uncertainty"].is_number())
                schema_error(where + ".uncertainty", "expected a number");
            m.uncertainty = j["uncertainty"].get<double>();
            if (*m.uncertainty < 0) schema_error(where + ".uncertainty", "must be >= 0");
        }
        return m;
    }
    schema_error(where, "expected a number or {value, uncertainty}");
}

MaterialRecord parse_material(const json& j, const std::string& where) {
    if (!j.is_object()) schema_error(where, "expected an object");
    MaterialRecord rec;
    rec.canonical_name = require_string(j, where, "canonical_name");
    if (rec.canonical_name.empty()) schema_error(where + ".canonical_name", "must be non-empty");
    rec.smiles = j.value("smiles", std::string());
    if (j.contains("synonyms"))
        rec.synonyms = string_list(require_array(j, where, "synonyms"), where + ".synonyms");
    const json& cats = require_array(j, where, "categories");
    for (size_t i = 0; i < cats.size(); ++i) {
        std::string cwhere = where + ".categories[" + std::to_string(i) + "]";
        if (!cats[i].is_string()) schema_error(cwhere, "expected a string");
        auto parsed = technology_category_from_string(cats[i].get<std::string>());
        if (!parsed) schema_error(cwhere, "unknown category \"" + cats[i].get<std::string>() + "\"");
        rec.categories.push_back(*parsed);
    }
    if (j.contains("fom_values")) {
        if (!j["fom_values"].is_object()) schema_error(where + ".fom_values", "expected an object");
        for (auto it = j["fom_values"].begin(); it != j["fom_values"].end(); ++it) {
            rec.fom_values.emplace(it.key(),
                                   parse_scalar(it.value(), where + ".fom_values." + it.key()));
        }
    }
    return rec;
}

void validate(const std::vector<MaterialRecord>& materials, const FomCatalog& catalog,
              int declared_reference_count) {
    // FoM ids unique; names and synonyms collision-free after normalization.
    std::unordered_map<std::string, std::string> fom_ids;
    std::unordered_map<std::string, std::string> fom_names;
    for (size_t i = 0; i < catalog.definitions().size(); ++i) {
        const FomDefinition& def = catalog.definitions()[i];
        std::string where = "fom_catalog[" + std::to_string(i) + "]";
        if (!fom_ids.emplace(def.fom_id, where).second)
            throw InvariantViolation(where + ": duplicate fom_id \"" + def.fom_id + "\"");
        auto claim_name = [&](const std::string& s, const std::string& what) {
            std::string key = text::normalize_key(s);
            if (key.empty()) throw InvariantViolation(where + ": empty " + what);
            auto [it, fresh] = fom_names.emplace(key, def.fom_id);
            if (!fresh && it->second != def.fom_id)
                throw InvariantViolation(where + ": " + what + " \"" + s +
                                         "\" collides with FoM \"" + it->second + "\"");
        };
        claim_name(def.display_name, "display_name");
        for (const auto& syn : def.synonyms) claim_name(syn, "synonym");
        for (const auto& sp : def.species) {
            if (!catalog.species_dictionary().count(sp))
                throw InvariantViolation(where + ": species \"" + sp +
                                         "\" is not in the species dictionary");
        }
        if (def.is_state_variable && def.category != FomCategory::Common)
            throw InvariantViolation(where + ": state variables must have category Common");
    }

    // Exhaustive pairwise check: no two FoMs share a multi-species set.
    const auto& defs = catalog.definitions();
    for (size_t a = 0; a < defs.size(); ++a) {
        if (defs[a].species.size() < 2) continue;
        std::set<std::string> sa(defs[a].species.begin(), defs[a].species.end());
        for (size_t b = a + 1; b < defs.size(); ++b) {
            if (defs[b].species.size() < 2) continue;
            std::set<std::string> sb(defs[b].species.begin(), defs[b].species.end());
            if (sa == sb)
                throw InvariantViolation("fom_catalog[" + std::to_string(b) + "]: species set of \"" +
                                         defs[b].fom_id + "\" duplicates \"" + defs[a].fom_id + "\"");
        }
    }

    // Every surface form maps to exactly one species symbol.
    std::unordered_map<std::string, std::string> form_owner;
    for (const auto& [symbol, forms] : catalog.species_dictionary()) {
        for (const auto& form : forms) {
            auto [it, fresh] = form_owner.emplace(text::normalize_subscripts(form), symbol);
            if (!fresh && it->second != symbol)
                throw InvariantViolation("species_dictionary: surface form \"" + form +
                                         "\" maps to both \"" + it->second + "\" and \"" + symbol +
                                         "\"");
        }
    }

    // Material names and synonyms collision-free; fom_values keys resolve.
    std::unordered_map<std::string, std::string> mat_names;
    int reference_entries = 0;
    for (size_t i = 0; i < materials.size(); ++i) {
        const MaterialRecord& m = materials[i];
        std::string where = "materials[" + std::to_string(i) + "]";
        auto claim_name = [&](const std::string& s, const std::string& what) {
            std::string key = text::normalize_key(s);
            if (key.empty()) throw InvariantViolation(where + ": empty " + what);
            auto [it, fresh] = mat_names.emplace(key, m.canonical_name);
            if (!fresh)
                throw InvariantViolation(where + ": " + what + " \"" + s +
                                         "\" collides with material \"" + it->second + "\"");
        };
        claim_name(m.canonical_name, "canonical_name");
        for (const auto& syn : m.synonyms) claim_name(syn, "synonym");
        for (const auto& [fom_id, value] : m.fom_values) {
            if (!catalog.fom_by_id(fom_id))
                throw InvariantViolation(where + ".fom_values: unknown fom_id \"" + fom_id + "\"");
        }
        if (m.is_reference_entry()) ++reference_entries;
    }

    if (declared_reference_count != reference_entries)
        throw InvariantViolation("reference_entry_count declares " +
                                 std::to_string(declared_reference_count) + " entries but " +
                                 std::to_string(reference_entries) +
                                 " materials carry reference values");
}

}  // namespace

MaterialBasePtr load_material_base_from_string(const std::string& json_text,
                                               const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw MalformedFile(origin + ": " + e.what());
    }
    if (!doc.is_object()) schema_error(origin, "top level must be an object");

    const json& cat_arr = require_array(doc, origin, "fom_catalog");
    std::vector<FomDefinition> defs;
    for (size_t i = 0; i < cat_arr.size(); ++i) {
        defs.push_back(parse_fom(cat_arr[i], "fom_catalog[" + std::to_string(i) + "]"));
    }

    if (!doc.contains("species_dictionary") || !doc["species_dictionary"].is_object())
        schema_error(origin, "missing object \"species_dictionary\"");
    std::map<std::string, std::vector<std::string>> species_dict;
    for (auto it = doc["species_dictionary"].begin(); it != doc["species_dictionary"].end(); ++it) {
        if (!it.value().is_array())
            schema_error("species_dictionary." + it.key(), "expected an array of surface forms");
        species_dict.emplace(it.key(),
                             string_list(it.value(), "species_dictionary." + it.key()));
    }

    const json& mat_arr = require_array(doc, origin, "materials");
    std::vector<MaterialRecord> materials;
    for (size_t i = 0; i < mat_arr.size(); ++i) {
        materials.push_back(parse_material(mat_arr[i], "materials[" + std::to_string(i) + "]"));
    }

    if (!doc.contains("reference_entry_count") ||
        !doc["reference_entry_count"].is_number_integer())
        schema_error(origin, "missing integer \"reference_entry_count\"");
    int ref_count = doc["reference_entry_count"].get<int>();

    FomCatalog catalog(std::move(defs), std::move(species_dict));
    validate(materials, catalog, ref_count);
    return std::make_shared<MaterialBase>(std::move(materials), std::move(catalog), ref_count);
}

MaterialBasePtr load_material_base(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFile(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_material_base_from_string(buf.str(), path);
}

}  // namespace fomgraph
