#include "support/fixtures.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>
#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fomgraph/util.hpp"

namespace fixtures {

using fomgraph::AnnotatedDocument;
using fomgraph::AnnotatedTable;
using nlohmann::json;

// ---- paths & materials base -------------------------------------------------

std::string data_path(const std::string& name) {
    return std::string(FOMGRAPH_DATA_DIR) + "/" + name;
}

std::string cli_path() { return std::string(FOMGRAPH_CLI_PATH); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fixtures: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("fixtures: cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string mb_text() { return read_file(data_path("mb.json")); }

json mb_as_json() { return json::parse(mb_text()); }

fomgraph::MaterialBasePtr shipped_mb() {
    static fomgraph::MaterialBasePtr mb = fomgraph::load_material_base(data_path("mb.json"));
    return mb;
}

std::string mb_text_table1_as_reference() {
    json root = mb_as_json();
    int promoted = 0;
    for (auto& m : root["materials"]) {
        std::string name = m["canonical_name"].get<std::string>();
        if (name == "Pure Ultem HFM") {
            m["fom_values"] = json{{"co2_permeance_gpu", 15.3}};
            ++promoted;
        } else if (name == "MMHFM") {
            m["fom_values"] = json{{"co2_permeance_gpu", 30.0}};
            ++promoted;
        }
    }
    if (promoted != 2) throw std::runtime_error("fixtures: hollow-fiber materials not found in MB");
    root["reference_entry_count"] = root["reference_entry_count"].get<int>() + promoted;
    return root.dump(2);
}

// ---- documents ----------------------------------------------------------

std::string table1_text() { return read_file(data_path("table1.json")); }

AnnotatedDocument table1_document() {
    return fomgraph::parse_document(table1_text(), "table1.json");
}

AnnotatedTable make_table(int index, std::vector<std::string> header,
                          std::vector<std::vector<std::string>> body, std::string caption) {
    AnnotatedTable t;
    t.table_index = index;
    t.caption = std::move(caption);
    t.header_row = std::move(header);
    t.body = std::move(body);
    return t;
}

AnnotatedDocument make_document(std::string doc_id, std::vector<AnnotatedTable> tables) {
    AnnotatedDocument doc;
    doc.doc_id = std::move(doc_id);
    doc.tables = std::move(tables);
    doc.empty_warning = doc.tables.empty();
    return doc;
}

namespace {

// Strings that exercise JSON escaping and multi-byte characters.
const std::vector<std::string>& tricky_strings() {
    static const std::vector<std::string> pool = {
        "",
        "plain",
        "Zeolite 13X",
        "CO₂ uptake",
        "15.3 ± 0.2",
        "a \"quoted\" name",
        "back\\slash",
        "line\nbreak",
        "tab\tseparated",
        "em—dash",
        "trailing space ",
        " weird/chars<>&",
        "µmol per gram",
    };
    return pool;
}

std::string random_string(std::mt19937& rng) {
    const auto& pool = tricky_strings();
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> parts(1, 2);
    std::string out = pool[pick(rng)];
    if (parts(rng) == 2) out += " " + pool[pick(rng)];
    return out;
}

}  // namespace

AnnotatedDocument random_document(std::mt19937& rng, int index) {
    std::uniform_int_distribution<int> n_tables(0, 3);
    std::uniform_int_distribution<int> n_cols(1, 5);
    std::uniform_int_distribution<int> n_rows(0, 4);
    std::uniform_int_distribution<int> letter('a', 'z');

    std::string suffix;
    for (int i = 0; i < 4; ++i) suffix.push_back(static_cast<char>(letter(rng)));
    AnnotatedDocument doc;
    doc.doc_id = "doc-" + std::to_string(index) + "-" + suffix;

    int tables = n_tables(rng);
    for (int t = 0; t < tables; ++t) {
        AnnotatedTable table;
        table.table_index = t;
        table.caption = random_string(rng);
        int cols = n_cols(rng);
        for (int c = 0; c < cols; ++c) table.header_row.push_back(random_string(rng));
        int rows = n_rows(rng);
        for (int r = 0; r < rows; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < cols; ++c) row.push_back(random_string(rng));
            table.body.push_back(std::move(row));
        }
        doc.tables.push_back(std::move(table));
    }
    doc.empty_warning = doc.tables.empty();
    return doc;
}

std::vector<AnnotatedDocument> synthetic_corpus(std::mt19937& rng, int n_docs) {
    static const std::vector<std::string> materials = {
        "Pure Ultem HFM", "MMHFM",       "PIM-1",      "Matrimid", "MEA",
        "Zeolite 13X",    "ZIF-8",       "Pebax MH 1657", "THF",   "CaO",
        "unknown alloy",  "Sample A-42", "mystery blend",
    };
    static const std::vector<std::string> first_headers = {"Material", "Material's Name", "Sample"};
    static const std::vector<std::string> value_headers = {
        "CO2 (GPU)",
        "CO2/N2 Selectivity",
        "N2",
        "H2O (GPU)",
        "BET Surface Area (m2/g)",
        "absorption flux (mol/mol)",
        "Temperature (K)",
        "Pressure (bar)",
        "CO2 Uptake (mmol/g)",
        "Notes",
        "CO2/CH4",
        "Regeneration Energy (GJ/t)",
        "CH4 conversion (%)",
        "Viscosity (mPa·s)",
    };
    static const std::vector<std::string> cells = {
        "15.3", "0.5",  "1,234.5", "3.1e-2", "12 ± 3", "10-20", "5–9",
        "n.d.", "—", "trace",  "42a",    "0.78",        "",      "310",
        "298",  "1.0",  "7 +/- 2", "0.031",
    };

    std::uniform_int_distribution<size_t> pick_mat(0, materials.size() - 1);
    std::uniform_int_distribution<size_t> pick_first(0, first_headers.size() - 1);
    std::uniform_int_distribution<size_t> pick_header(0, value_headers.size() - 1);
    std::uniform_int_distribution<size_t> pick_cell(0, cells.size() - 1);
    std::uniform_int_distribution<int> n_tables(1, 3);
    std::uniform_int_distribution<int> n_cols(1, 4);  // value columns
    std::uniform_int_distribution<int> n_rows(1, 6);

    std::vector<AnnotatedDocument> docs;
    docs.reserve(n_docs);
    for (int d = 0; d < n_docs; ++d) {
        AnnotatedDocument doc;
        char buf[32];
        std::snprintf(buf, sizeof buf, "corpus-%03d", d);
        doc.doc_id = buf;
        int tables = n_tables(rng);
        for (int t = 0; t < tables; ++t) {
            AnnotatedTable table;
            table.table_index = t;
            table.caption = "synthetic table " + std::to_string(t);
            table.header_row.push_back(first_headers[pick_first(rng)]);
            int cols = n_cols(rng);
            for (int c = 0; c < cols; ++c) table.header_row.push_back(value_headers[pick_header(rng)]);
            int rows = n_rows(rng);
            for (int r = 0; r < rows; ++r) {
                std::vector<std::string> row;
                row.push_back(materials[pick_mat(rng)]);
                for (int c = 0; c < cols; ++c) row.push_back(cells[pick_cell(rng)]);
                table.body.push_back(std::move(row));
            }
            doc.tables.push_back(std::move(table));
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

AnnotatedDocument big_document(const std::string& doc_id, int tables, int rows) {
    static const std::vector<std::string> materials = {"MMHFM", "Pure Ultem HFM", "Sample Z"};
    AnnotatedDocument doc;
    doc.doc_id = doc_id;
    doc.tables.reserve(tables);
    for (int t = 0; t < tables; ++t) {
        AnnotatedTable table;
        table.table_index = t;
        table.caption = "bulk table " + std::to_string(t);
        table.header_row = {"Material", "Temperature (K)", "CO2 (GPU)"};
        for (int r = 0; r < rows; ++r) {
            int v = 10 + (t * 7 + r) % 90;
            std::string value =
                (r % 7 == 3) ? "n.d." : std::to_string(v) + "." + std::to_string(r % 10);
            table.body.push_back({materials[(t + r) % materials.size()], "298", value});
        }
        doc.tables.push_back(std::move(table));
    }
    return doc;
}

// ---- zip archives -------------------------------------------------------

namespace {

void put_u16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& s, uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string deflate_raw(const std::string& in) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) !=
        Z_OK)
        throw std::runtime_error("fixtures: deflateInit2 failed");
    std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("fixtures: deflate failed");
    return out;
}

}  // namespace

std::string build_zip(const std::vector<ZipSpec>& members) {
    std::string out;
    std::string central;
    for (const auto& m : members) {
        uint32_t crc = static_cast<uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(m.bytes.data()),
                  static_cast<uInt>(m.bytes.size())));
        std::string data = m.deflate ? deflate_raw(m.bytes) : m.bytes;
        uint16_t method = m.deflate ? 8 : 0;
        uint32_t local_offset = static_cast<uint32_t>(out.size());

        out += "PK\x03\x04";
        put_u16(out, 20);  // version needed
        put_u16(out, 0);   // flags
        put_u16(out, method);
        put_u16(out, 0);  // mod time
        put_u16(out, 0);  // mod date
        put_u32(out, crc);
        put_u32(out, static_cast<uint32_t>(data.size()));
        put_u32(out, static_cast<uint32_t>(m.bytes.size()));
        put_u16(out, static_cast<uint16_t>(m.name.size()));
        put_u16(out, 0);  // extra length
        out += m.name;
        out += data;

        central += "PK\x01\x02";
        put_u16(central, 20);  // version made by
        put_u16(central, 20);  // version needed
        put_u16(central, 0);   // flags
        put_u16(central, method);
        put_u16(central, 0);  // mod time
        put_u16(central, 0);  // mod date
        put_u32(central, crc);
        put_u32(central, static_cast<uint32_t>(data.size()));
        put_u32(central, static_cast<uint32_t>(m.bytes.size()));
        put_u16(central, static_cast<uint16_t>(m.name.size()));
        put_u16(central, 0);  // extra length
        put_u16(central, 0);  // comment length
        put_u16(central, 0);  // disk number
        put_u16(central, 0);  // internal attributes
        put_u32(central, 0);  // external attributes
        put_u32(central, local_offset);
        central += m.name;
    }
    uint32_t cd_offset = static_cast<uint32_t>(out.size());
    out += central;
    out += "PK\x05\x06";
    put_u16(out, 0);  // this disk
    put_u16(out, 0);  // central-directory disk
    put_u16(out, static_cast<uint16_t>(members.size()));
    put_u16(out, static_cast<uint16_t>(members.size()));
    put_u32(out, static_cast<uint32_t>(central.size()));
    put_u32(out, cd_offset);
    put_u16(out, 0);  // comment length
    return out;
}

std::string empty_zip() { return build_zip({}); }

// ---- filesystem -----------------------------------------------------------

TempDir::TempDir()
    : path_(std::filesystem::temp_directory_path() /
            ("fomgraph-test-" + fomgraph::util::new_uuid())) {
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

// ---- subprocesses ----------------------------------------------------------

std::string sh_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out.push_back(c);
    }
    out += "'";
    return out;
}

ExecResult run_cmd(const std::string& cmd, bool merge_stderr) {
    std::string full = cmd + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) return {-1, "popen failed"};
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    int rc = pclose(pipe);
    ExecResult result;
    result.output = std::move(out);
    result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return result;
}

SpawnedServer::SpawnedServer(const std::vector<std::string>& serve_args) {
    int fds[2];
    if (pipe(fds) != 0) return;
    pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        return;
    }
    if (pid == 0) {
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        close(fds[0]);
        close(fds[1]);
        std::string bin = cli_path();
        std::vector<std::string> args = {bin, "serve"};
        args.insert(args.end(), serve_args.begin(), serve_args.end());
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        execv(bin.c_str(), argv.data());
        _exit(127);
    }
    close(fds[1]);
    pid_ = pid;
    out_fd_ = fds[0];

    // Scrape stdout for the "listening" line, with a hard deadline.
    std::string acc;
    for (int spins = 0; spins < 300 && port_ == 0; ++spins) {
        struct pollfd pfd{out_fd_, POLLIN, 0};
        int ready = poll(&pfd, 1, 50);
        if (ready <= 0) continue;
        char buf[1024];
        ssize_t n = ::read(out_fd_, buf, sizeof buf);
        if (n <= 0) break;
        acc.append(buf, static_cast<size_t>(n));
        size_t start = 0;
        size_t nl;
        while ((nl = acc.find('\n', start)) != std::string::npos) {
            std::string line = acc.substr(start, nl - start);
            start = nl + 1;
            json j = json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.value("event", std::string()) == "listening") {
                port_ = j.value("port", 0);
                break;
            }
        }
        acc.erase(0, start);
    }
}

SpawnedServer::~SpawnedServer() {
    if (pid_ > 0) {
        kill(static_cast<pid_t>(pid_), SIGTERM);
        int status = 0;
        waitpid(static_cast<pid_t>(pid_), &status, 0);
    }
    if (out_fd_ >= 0) close(out_fd_);
}

// ---- generated value-parser cases --------------------------------------------

namespace {

double oracle_number(const std::string& with_commas) {
    std::string s;
    for (char c : with_commas)
        if (c != ',') s.push_back(c);
    return std::strtod(s.c_str(), nullptr);
}

std::string plain_decimal(std::mt19937& rng, bool allow_sign) {
    std::uniform_int_distribution<int> shape(0, 4);
    std::uniform_int_distribution<int> whole(0, 9999);
    std::uniform_int_distribution<int> frac(0, 999);
    std::string s;
    if (allow_sign) {
        std::uniform_int_distribution<int> sign(0, 3);
        int k = sign(rng);
        if (k == 1) s += "-";
        if (k == 2) s += "+";
    }
    switch (shape(rng)) {
        case 0: s += std::to_string(whole(rng)); break;
        case 1: s += std::to_string(whole(rng)) + "." + std::to_string(frac(rng)); break;
        case 2: s += "." + std::to_string(frac(rng)); break;
        case 3: s += "0." + std::to_string(frac(rng)); break;
        default: s += std::to_string(whole(rng)) + "." + std::to_string(frac(rng)); break;
    }
    return s;
}

std::string scientific(std::mt19937& rng, bool allow_sign) {
    std::uniform_int_distribution<int> exp(-8, 8);
    std::uniform_int_distribution<int> marker(0, 1);
    std::uniform_int_distribution<int> plus(0, 1);
    int e = exp(rng);
    std::string s = plain_decimal(rng, allow_sign);
    s += marker(rng) ? "E" : "e";
    if (e >= 0 && plus(rng)) s += "+";
    s += std::to_string(e);
    return s;
}

std::string thousands(std::mt19937& rng) {
    std::uniform_int_distribution<int> lead(1, 999);
    std::uniform_int_distribution<int> group(0, 999);
    std::uniform_int_distribution<int> n_groups(1, 2);
    std::uniform_int_distribution<int> frac(0, 99);
    std::uniform_int_distribution<int> coin(0, 3);
    std::string s = std::to_string(lead(rng));
    int g = n_groups(rng);
    for (int i = 0; i < g; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, ",%03d", group(rng));
        s += buf;
    }
    if (coin(rng) == 0) s += "." + std::to_string(frac(rng));
    return s;
}

const std::vector<std::string>& junk_pool() {
    static const std::vector<std::string> pool = {
        "",      "   ",    "n.d.",  "n/a",   "—", "–", "±", "± 5",
        "1 ± ", "trace", "abc",  "12.3 GPU", "10-",  "-",      ".",      "..",
        "1..2",  "1,23",   "3,5",   "12,34", "1,2345", ",123",   "1234,567", "1,234,56",
        "0x1F",  "inf",    "NaN",   "1 2",   "5.6.7",  "--3",    "1e+",     "[15]",
        "(3)",   ">100",   "<0.1",  "~5",    "1e3.5",  "15.3ab", "+",       "e5",
    };
    return pool;
}

}  // namespace

std::vector<ValueCase> generate_value_cases(std::mt19937& rng, int n) {
    std::uniform_int_distribution<int> kind(0, 6);
    std::uniform_int_distribution<size_t> junk(0, junk_pool().size() - 1);
    std::uniform_int_distribution<int> sep4(0, 3);
    std::uniform_int_distribution<int> letter_pick(0, 5);
    static const char letters[] = {'a', 'b', 'c', 'd', 'g', 'n'};
    static const std::vector<std::string> pm_seps = {"±", " ± ", "+/-", " +/- "};
    static const std::vector<std::string> range_seps = {"-", " - ", "–", " – "};

    std::vector<ValueCase> cases;
    cases.reserve(n);
    while (static_cast<int>(cases.size()) < n) {
        ValueCase c;
        int k = kind(rng);
        bool footnote = false;
        if (k == 6) {
            // Reuse one of the numeric shapes and append a footnote marker.
            std::uniform_int_distribution<int> base(0, 4);
            k = base(rng);
            footnote = true;
        }
        switch (k) {
            case 0: {
                c.text = plain_decimal(rng, true);
                c.numeric = true;
                c.value = oracle_number(c.text);
                break;
            }
            case 1: {
                c.text = scientific(rng, true);
                c.numeric = true;
                c.value = oracle_number(c.text);
                break;
            }
            case 2: {
                c.text = thousands(rng);
                c.numeric = true;
                c.value = oracle_number(c.text);
                break;
            }
            case 3: {
                std::string a = (sep4(rng) < 2) ? plain_decimal(rng, true) : scientific(rng, true);
                std::string b = plain_decimal(rng, false);
                c.text = a + pm_seps[sep4(rng)] + b;
                c.numeric = true;
                c.value = oracle_number(a);
                c.uncertainty = oracle_number(b);
                break;
            }
            case 4: {
                std::string a = (sep4(rng) == 0) ? scientific(rng, false) : plain_decimal(rng, false);
                std::string b = (sep4(rng) == 0) ? scientific(rng, false) : plain_decimal(rng, false);
                c.text = a + range_seps[sep4(rng)] + b;
                c.numeric = true;
                double av = oracle_number(a), bv = oracle_number(b);
                c.value = (av + bv) / 2.0;
                c.uncertainty = std::abs(bv - av) / 2.0;
                break;
            }
            default: {
                c.text = junk_pool()[junk(rng)];
                c.numeric = false;
                break;
            }
        }
        if (footnote && c.numeric) c.text += letters[letter_pick(rng)];
        cases.push_back(std::move(c));
    }
    return cases;
}

// ---- misc --------------------------------------------------------------------

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace fixtures
