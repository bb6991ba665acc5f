#pragma once

#include <string>
#include <string_view>

namespace fomgraph::text {

// Replaces Unicode subscript digits (U+2080..U+2089) with ASCII digits, so
// "CO₂" compares equal to "CO2". Leaves every other byte alone.
std::string normalize_subscripts(std::string_view s);

std::string trim(std::string_view s);

// ASCII lowercase; multi-byte sequences pass through untouched.
std::string to_lower(std::string_view s);

// Runs of whitespace become a single space.
std::string collapse_whitespace(std::string_view s);

// The lookup normalization used for material names, FoM names and synonyms:
// subscript digits -> ASCII, trim, casefold, collapse internal whitespace.
std::string normalize_key(std::string_view s);

bool is_ascii_alnum(char c);

// ASCII case-insensitive suffix test, for filename extensions.
bool ends_with_icase(std::string_view s, std::string_view suffix);

}  // namespace fomgraph::text
