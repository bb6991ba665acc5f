// Shared test scaffolding: canned documents, MB variants, an in-memory zip
// writer, random corpus generators, temp dirs, and subprocess helpers.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fomgraph/catalog.hpp"
#include "fomgraph/ingest.hpp"

namespace fixtures {

// ---- paths & materials base ------------------------------------------------

// Absolute path of a file under the repository's data/ directory.
std::string data_path(const std::string& name);
// Absolute path of the built command-line binary.
std::string cli_path();

std::string mb_text();            // shipped mb.json bytes
nlohmann::json mb_as_json();      // parsed copy, free to mutate
fomgraph::MaterialBasePtr shipped_mb();  // loaded once, cached

// MB variant in which the two hollow-fiber-membrane materials carry curated
// CO2 permeance values, i.e. both become reference-table entries.
std::string mb_text_table1_as_reference();

// ---- documents ---------------------------------------------------------

std::string table1_text();
fomgraph::AnnotatedDocument table1_document();

fomgraph::AnnotatedTable make_table(int index, std::vector<std::string> header,
                                    std::vector<std::vector<std::string>> body,
                                    std::string caption = "synthetic table");
fomgraph::AnnotatedDocument make_document(std::string doc_id,
                                          std::vector<fomgraph::AnnotatedTable> tables);

// Structurally valid document with adversarial strings (quotes, backslashes,
// control characters, non-ASCII) for serialization round-trip suites.
fomgraph::AnnotatedDocument random_document(std::mt19937& rng, int index);

// Corpus whose tables name shipped-MB materials and FoM headers, with a mix
// of parseable and junk cells. Deterministic given the generator state.
std::vector<fomgraph::AnnotatedDocument> synthetic_corpus(std::mt19937& rng, int n_docs);

// One document with `tables` tables of `rows` rows each, for latency tests.
fomgraph::AnnotatedDocument big_document(const std::string& doc_id, int tables, int rows);

// ---- zip archives --------------------------------------------------------

struct ZipSpec {
    std::string name;
    std::string bytes;
    bool deflate = false;
};

std::string build_zip(const std::vector<ZipSpec>& members);
std::string empty_zip();  // a valid archive holding zero members

// ---- filesystem ------------------------------------------------------------

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

// ---- subprocesses ---------------------------------------------------------

struct ExecResult {
    int exit_code = -1;
    std::string output;
};

std::string sh_quote(const std::string& s);
// Runs via the shell; captures stdout, and stderr too when merge_stderr is
// set (otherwise stderr is discarded).
ExecResult run_cmd(const std::string& cmd, bool merge_stderr = false);

// Runs `<cli> serve <args...>` as a child process and scrapes the bound port
// from its "listening" log line. The destructor terminates the child.
class SpawnedServer {
public:
    explicit SpawnedServer(const std::vector<std::string>& serve_args);
    ~SpawnedServer();
    SpawnedServer(const SpawnedServer&) = delete;
    SpawnedServer& operator=(const SpawnedServer&) = delete;

    bool ok() const { return port_ > 0; }
    int port() const { return port_; }

private:
    long pid_ = -1;
    int out_fd_ = -1;
    int port_ = 0;
};

// ---- generated value-parser cases -------------------------------------------

// A cell string with its independently computed expectation. For numeric
// cases the expected value/uncertainty are derived from the generating
// components via strtod, not from the parser under test.
struct ValueCase {
    std::string text;
    bool numeric = false;
    double value = 0.0;
    std::optional<double> uncertainty;
};

std::vector<ValueCase> generate_value_cases(std::mt19937& rng, int n);

// ---- misc -------------------------------------------------------------------

uint64_t fnv1a64(const std::string& bytes);

}  // namespace fixtures
