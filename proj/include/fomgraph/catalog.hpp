#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fomgraph/errors.hpp"

namespace fomgraph {

enum class TechnologyCategory {
    LiquidAbsorption,
    SolidAdsorption,
    Membrane,
    Hydrate,
    ChemicalLooping,
};

inline constexpr int kTechnologyCategoryCount = 5;

// FoM grouping: one of the five technologies, or common to all of them.
enum class FomCategory {
    Common,
    LiquidAbsorption,
    SolidAdsorption,
    Membrane,
    Hydrate,
    ChemicalLooping,
};

const char* to_string(TechnologyCategory c);
const char* to_string(FomCategory c);
std::optional<TechnologyCategory> technology_category_from_string(const std::string& s);
std::optional<FomCategory> fom_category_from_string(const std::string& s);

struct ScalarMeasurement {
    double value = 0.0;
    std::optional<double> uncertainty;

    bool operator==(const ScalarMeasurement&) const = default;
};

struct FomDefinition {
    std::string fom_id;
    std::string display_name;
    std::vector<std::string> synonyms;
    std::string canonical_unit;  // "" for dimensionless
    FomCategory category = FomCategory::Common;
    std::vector<std::string> species;  // chemical species symbols, may be empty
    bool is_state_variable = false;
    int catalog_position = 0;  // index in the catalog; defines "first match" order

    bool has_species(const std::string& symbol) const;
};

struct MaterialRecord {
    std::string canonical_name;
    std::string smiles;  // may be empty
    std::vector<std::string> synonyms;
    std::vector<TechnologyCategory> categories;
    // Curated ground-truth values, keyed by fom_id. A material with at least
    // one entry here is a reference-table entry.
    std::map<std::string, ScalarMeasurement> fom_values;

    bool is_reference_entry() const { return !fom_values.empty(); }
};

// Per-technology field counts; the shipped catalog ships 4/19/3/14/9 where
// the 19 covers liquid absorption and solid adsorption together.
struct CatalogGroupCounts {
    int common = 0;
    int sorption = 0;  // LiquidAbsorption + SolidAdsorption
    int hydrate = 0;
    int membrane = 0;
    int chemical_looping = 0;
};

class FomCatalog {
public:
    FomCatalog() = default;
    FomCatalog(std::vector<FomDefinition> definitions,
               std::map<std::string, std::vector<std::string>> species_dictionary);

    const std::vector<FomDefinition>& definitions() const { return definitions_; }
    const std::map<std::string, std::vector<std::string>>& species_dictionary() const {
        return species_dictionary_;
    }

    const FomDefinition* fom_by_id(const std::string& fom_id) const;

    // Exact match of display_name or synonym after normalization; expects the
    // unit suffix to be stripped already. Collisions are ruled out at load.
    const FomDefinition* fom_by_exact_name(const std::string& header_text) const;

    // All definitions whose species set contains the symbol, ordered by
    // catalog_position. Throws UnknownSpecies for symbols missing from the
    // species dictionary.
    std::vector<const FomDefinition*> foms_containing_species(const std::string& symbol) const;

    // The unique definition whose species set equals the input (size >= 2),
    // or nullptr. A set of fewer than two symbols is a caller bug.
    const FomDefinition* fom_by_species_set(const std::set<std::string>& species) const;

    CatalogGroupCounts group_counts() const;

    // Value fields with is_state_variable == false, in catalog order. This is
    // the feature-vector layout.
    std::vector<const FomDefinition*> value_fields() const;

private:
    std::vector<FomDefinition> definitions_;
    std::map<std::string, std::vector<std::string>> species_dictionary_;
    std::unordered_map<std::string, int> by_id_;
    std::unordered_map<std::string, int> by_name_;  // normalized name/synonym -> index
    std::map<std::set<std::string>, int> by_species_set_;
    std::unordered_map<std::string, std::vector<int>> by_species_;

    friend class MaterialBaseBuilder;
};

// Immutable snapshot of the materials knowledge base: all known materials,
// the FoM catalog and the reference-table view. Loaded once, shared by
// readers; a reload produces a new snapshot.
class MaterialBase {
public:
    MaterialBase(std::vector<MaterialRecord> materials, FomCatalog catalog,
                 int declared_reference_count);

    const std::vector<MaterialRecord>& materials() const { return materials_; }
    const FomCatalog& catalog() const { return catalog_; }

    // Resolves a canonical name or synonym after normalization (trim,
    // casefold, whitespace collapse, subscript digits); nullptr if absent.
    const MaterialRecord* lookup_material(const std::string& name) const;

    bool is_reference_entry(const std::string& canonical_name) const;
    bool reference_has_value(const std::string& canonical_name, const std::string& fom_id) const;

    std::vector<const MaterialRecord*> reference_entries() const;
    int reference_entry_count() const { return reference_entry_count_; }

private:
    std::vector<MaterialRecord> materials_;
    FomCatalog catalog_;
    int reference_entry_count_ = 0;
    std::unordered_map<std::string, int> by_name_;  // normalized name/synonym -> index
};

using MaterialBasePtr = std::shared_ptr<const MaterialBase>;

// Parses and validates an MB JSON document. Diagnostics carry the offending
// position. Throws MalformedFile / SchemaViolation / InvariantViolation.
MaterialBasePtr load_material_base(const std::string& path);
MaterialBasePtr load_material_base_from_string(const std::string& json_text,
                                               const std::string& origin = "<string>");

}  // namespace fomgraph
