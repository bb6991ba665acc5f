#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fomgraph::zip {

struct Entry {
    std::string name;
    std::string bytes;
};

// Reads a zip archive held in memory. Supports stored and deflated members;
// rejects encrypted members and zip64 archives. Throws NotAnArchive when the
// bytes are not a zip file; a member that fails CRC or decompression throws
// MemberError naming it.
std::vector<Entry> read_archive(const std::string& bytes);

class MemberError : public std::runtime_error {
public:
    MemberError(const std::string& member, const std::string& what)
        : std::runtime_error(member + ": " + what), member_(member) {}
    const std::string& member() const { return member_; }

private:
    std::string member_;
};

}  // namespace fomgraph::zip
