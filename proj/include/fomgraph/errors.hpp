#pragma once

#include <stdexcept>
#include <string>

namespace fomgraph {

// Input could not be parsed at all (bad JSON, bad archive bytes, ...).
class MalformedFile : public std::runtime_error {
public:
    explicit MalformedFile(const std::string& what) : std::runtime_error(what) {}
};

class MalformedJson : public MalformedFile {
public:
    explicit MalformedJson(const std::string& what) : MalformedFile(what) {}
};

// Parsed fine but a field is missing or has the wrong kind. The message
// carries the position ("tables[2].body[5]: ...").
class SchemaViolation : public std::runtime_error {
public:
    explicit SchemaViolation(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid but breaks a domain rule (duplicate synonym,
// duplicate multi-species set, reference count mismatch, ...).
class InvariantViolation : public std::runtime_error {
public:
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

class UnknownSpecies : public std::runtime_error {
public:
    explicit UnknownSpecies(const std::string& symbol)
        : std::runtime_error("unknown species symbol: " + symbol), symbol_(symbol) {}
    const std::string& symbol() const { return symbol_; }

private:
    std::string symbol_;
};

class NotAnArchive : public std::runtime_error {
public:
    explicit NotAnArchive(const std::string& what) : std::runtime_error(what) {}
};

class EmptyArchive : public std::runtime_error {
public:
    EmptyArchive() : std::runtime_error("archive contains no members") {}
};

// Bad key or value in a record-query filter.
class FilterError : public std::runtime_error {
public:
    explicit FilterError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fomgraph
