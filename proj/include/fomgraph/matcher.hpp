#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fomgraph {

using SpeciesDictionary = std::map<std::string, std::vector<std::string>>;

// Result of analyzing one column header.
struct HeaderAnalysis {
    std::string raw_text;
    std::string stripped_text;   // unit suffix removed
    std::optional<std::string> unit;
    std::vector<std::string> species_found;  // first-occurrence order, no duplicates
};

struct ParsedValue {
    double value = 0.0;
    std::optional<double> uncertainty;  // >= 0 when present
    std::string raw;

    bool operator==(const ParsedValue&) const = default;
};

// Finds dictionary species in a header string. Subscript digits are folded
// to ASCII first. Formula forms ("CO2") match case-sensitively, word forms
// ("carbon dioxide") case-insensitively; a form is a formula form when every
// alphabetic character in it is uppercase. A match needs a non-alphanumeric
// boundary on both sides, and a match contained inside a longer one is
// dropped ("O2" inside "CO2", "hydrogen" inside "hydrogen sulfide").
std::vector<std::string> detect_species(const std::string& header_text,
                                        const SpeciesDictionary& dictionary);

// Splits "CO2 (GPU)" into ("CO2", "GPU"). Only the last parenthesized group
// is considered, and only when its content looks like a unit (known unit, or
// letters/digits with '/', '·', '-', '%', '°', 'µ' and no spaces). Anything
// else leaves the text unchanged with no unit.
std::pair<std::string, std::optional<std::string>> extract_header_unit(
    const std::string& header_text);

// Unit extraction followed by species detection on the stripped text.
HeaderAnalysis analyze_header(const std::string& header_text,
                              const SpeciesDictionary& dictionary);

// Parses one table cell: plain decimals and scientific notation, "a ± b"
// (uncertainty b), "a-b" / "a–b" ranges (midpoint and half-width), thousands
// separators. A single trailing footnote letter is stripped when the rest
// parses. Decimal commas are rejected. Non-numeric cells yield nullopt.
std::optional<ParsedValue> parse_numeric_cell(const std::string& cell);

}  // namespace fomgraph
