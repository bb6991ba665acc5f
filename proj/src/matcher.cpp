#include "fomgraph/matcher.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "fomgraph/text.hpp"

namespace fomgraph {

namespace {

bool is_formula_form(const std::string& form) {
    bool has_alpha = false;
    for (unsigned char c : form) {
        if (c >= 0x80) return false;
        if (std::isalpha(c)) {
            has_alpha = true;
            if (std::islower(c)) return false;
        }
        if (std::isspace(c)) return false;
    }
    return has_alpha;
}

struct SpanMatch {
    size_t begin;
    size_t end;
    std::string symbol;
};

void find_matches(const std::string& haystack, const std::string& needle,
                  const std::string& symbol, bool case_sensitive,
                  std::vector<SpanMatch>& out) {
    if (needle.empty()) return;
    std::string h = case_sensitive ? haystack : text::to_lower(haystack);
    std::string n = case_sensitive ? needle : text::to_lower(needle);
    size_t pos = 0;
    while ((pos = h.find(n, pos)) != std::string::npos) {
        size_t end = pos + n.size();
        bool left_ok = pos == 0 || !text::is_ascii_alnum(haystack[pos - 1]);
        bool right_ok = end == haystack.size() || !text::is_ascii_alnum(haystack[end]);
        if (left_ok && right_ok) out.push_back({pos, end, symbol});
        ++pos;
    }
}

}  // namespace

std::vector<std::string> detect_species(const std::string& header_text,
                                        const SpeciesDictionary& dictionary) {
    std::string normalized = text::normalize_subscripts(header_text);

    std::vector<SpanMatch> matches;
    for (const auto& [symbol, forms] : dictionary) {
        for (const auto& form : forms) {
            std::string needle = text::normalize_subscripts(form);
            find_matches(normalized, needle, symbol, is_formula_form(needle), matches);
        }
    }

    // Drop matches strictly contained in a longer one ("O2" inside "CO2").
    std::vector<SpanMatch> kept;
    for (const auto& m : matches) {
        bool contained = std::any_of(matches.begin(), matches.end(), [&](const SpanMatch& o) {
            return (o.end - o.begin) > (m.end - m.begin) && o.begin <= m.begin && m.end <= o.end;
        });
        if (!contained) kept.push_back(m);
    }

    std::sort(kept.begin(), kept.end(), [](const SpanMatch& a, const SpanMatch& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return a.symbol < b.symbol;
    });

    std::vector<std::string> species;
    std::unordered_set<std::string> seen;
    for (const auto& m : kept) {
        if (seen.insert(m.symbol).second) species.push_back(m.symbol);
    }
    return species;
}

namespace {

// Spaced unit forms that the character pattern below would reject.
const std::unordered_set<std::string>& unit_lexicon() {
    static const std::unordered_set<std::string> lex = {
        "mol CO2/mol amine", "mol CO2/kg", "mmol CO2/g", "g CO2/g", "mol/mol amine",
        "cm3 STP/cm3", "L/m2 h",
    };
    return lex;
}

bool unit_like(const std::string& content) {
    if (content.empty()) return false;
    if (unit_lexicon().count(content)) return true;
    for (size_t i = 0; i < content.size();) {
        unsigned char c = static_cast<unsigned char>(content[i]);
        if (c < 0x80) {
            if (!(std::isalnum(c) || c == '/' || c == '-' || c == '%' || c == '.' || c == '^')) {
                return false;
            }
            ++i;
            continue;
        }
        // '·' C2 B7, '°' C2 B0, 'µ' C2 B5
        if (i + 1 < content.size() && c == 0xC2) {
            unsigned char c2 = static_cast<unsigned char>(content[i + 1]);
            if (c2 == 0xB7 || c2 == 0xB0 || c2 == 0xB5) {
                i += 2;
                continue;
            }
        }
        return false;
    }
    return true;
}

}  // namespace

std::pair<std::string, std::optional<std::string>> extract_header_unit(
    const std::string& header_text) {
    size_t rparen = header_text.rfind(')');
    if (rparen == std::string::npos) return {header_text, std::nullopt};
    size_t lparen = header_text.rfind('(', rparen);
    if (lparen == std::string::npos) return {header_text, std::nullopt};

    std::string content = text::trim(header_text.substr(lparen + 1, rparen - lparen - 1));
    if (!unit_like(content)) return {header_text, std::nullopt};

    std::string stripped = header_text.substr(0, lparen) + header_text.substr(rparen + 1);
    if (lparen > 0 && lparen < stripped.size() && stripped[lparen - 1] == ' ' &&
        stripped[lparen] == ' ') {
        stripped.erase(lparen, 1);
    }
    while (!stripped.empty() && std::isspace(static_cast<unsigned char>(stripped.back()))) {
        stripped.pop_back();
    }
    return {stripped, content};
}

HeaderAnalysis analyze_header(const std::string& header_text,
                              const SpeciesDictionary& dictionary) {
    HeaderAnalysis out;
    out.raw_text = header_text;
    auto [stripped, unit] = extract_header_unit(header_text);
    out.stripped_text = stripped;
    out.unit = unit;
    out.species_found = detect_species(stripped, dictionary);
    return out;
}

namespace {

// Full-consume numeric parse: optional sign, optional valid thousands
// separators, decimal point and e-notation. No decimal commas.
std::optional<double> parse_simple_number(const std::string& in) {
    std::string s = text::trim(in);
    if (s.empty()) return std::nullopt;

    if (s.find(',') != std::string::npos) {
        // Commas only as thousands separators: 1-3 leading digits then
        // comma-separated groups of exactly three.
        size_t i = 0;
        if (s[i] == '+' || s[i] == '-') ++i;
        size_t digits = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++digits, ++i;
        if (digits < 1 || digits > 3) return std::nullopt;
        bool any_group = false;
        while (i < s.size() && s[i] == ',') {
            ++i;
            for (int k = 0; k < 3; ++k, ++i) {
                if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
                    return std::nullopt;
            }
            any_group = true;
        }
        if (!any_group) return std::nullopt;
        // Remainder (".5", "e3") must not extend the last group or hold
        // further commas.
        if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        if (s.find(',', i) != std::string::npos) return std::nullopt;
        std::string cleaned;
        for (char c : s)
            if (c != ',') cleaned.push_back(c);
        return parse_simple_number(cleaned);
    }

    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;  // from_chars takes '-' but not '+'
    if (begin == end) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<ParsedValue> parse_cell_impl(const std::string& s) {
    if (auto v = parse_simple_number(s)) {
        ParsedValue out;
        out.value = *v;
        return out;
    }

    // "a ± b" (also ASCII "+/-").
    for (const std::string& sep : {std::string("\xC2\xB1"), std::string("+/-")}) {
        size_t pos = s.find(sep);
        if (pos == std::string::npos) continue;
        auto a = parse_simple_number(s.substr(0, pos));
        auto b = parse_simple_number(s.substr(pos + sep.size()));
        if (a && b && *b >= 0) {
            ParsedValue out;
            out.value = *a;
            out.uncertainty = *b;
            return out;
        }
        return std::nullopt;
    }

    // "a–b" / "a-b" ranges: value = midpoint, uncertainty = half-width.
    auto try_range = [&](size_t pos, size_t sep_len) -> std::optional<ParsedValue> {
        auto a = parse_simple_number(s.substr(0, pos));
        auto b = parse_simple_number(s.substr(pos + sep_len));
        if (!a || !b) return std::nullopt;
        ParsedValue out;
        out.value = (*a + *b) / 2.0;
        out.uncertainty = std::abs(*b - *a) / 2.0;
        return out;
    };
    size_t endash = s.find("\xE2\x80\x93");
    if (endash != std::string::npos) return try_range(endash, 3);
    for (size_t i = 1; i < s.size(); ++i) {
        if (s[i] != '-') continue;
        // The dash must follow a number, not a sign or an exponent marker.
        size_t j = i;
        while (j > 0 && s[j - 1] == ' ') --j;
        if (j == 0) continue;
        char prev = s[j - 1];
        if (!(std::isdigit(static_cast<unsigned char>(prev)) || prev == '.')) continue;
        if (auto r = try_range(i, 1)) return r;
    }
    return std::nullopt;
}

}  // namespace

std::optional<ParsedValue> parse_numeric_cell(const std::string& cell) {
    std::string s = text::trim(cell);
    if (s.empty()) return std::nullopt;

    auto result = parse_cell_impl(s);
    if (!result && std::isalpha(static_cast<unsigned char>(s.back()))) {
        // Footnote marker: one trailing letter, accepted only if the rest parses.
        result = parse_cell_impl(text::trim(s.substr(0, s.size() - 1)));
    }
    if (result) result->raw = cell;
    return result;
}

}  // namespace fomgraph
