#include "fomgraph/ziparchive.hpp"

#include <cstdint>
#include <cstring>

#include <zlib.h>

#include "fomgraph/errors.hpp"

namespace fomgraph::zip {

namespace {

uint16_t read_u16(const std::string& b, size_t off) {
    return static_cast<uint16_t>(static_cast<unsigned char>(b[off])) |
           (static_cast<uint16_t>(static_cast<unsigned char>(b[off + 1])) << 8);
}

uint32_t read_u32(const std::string& b, size_t off) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[off + i]);
    return v;
}

constexpr uint32_t kEocdSig = 0x06054b50;
constexpr uint32_t kCentralSig = 0x02014b50;
constexpr uint32_t kLocalSig = 0x04034b50;

std::string inflate_raw(const std::string& in, size_t expected_size, const std::string& name) {
    std::string out(expected_size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw MemberError(name, "inflate init failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    size_t produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected_size)
        throw MemberError(name, "deflate stream is corrupt");
    return out;
}

}  // namespace

std::vector<Entry> read_archive(const std::string& bytes) {
    // End-of-central-directory record: fixed 22 bytes plus a comment of up
    // to 64KB; scan backwards for the signature.
    if (bytes.size() < 22) throw NotAnArchive("too small to be a zip archive");
    size_t scan_start = bytes.size() >= 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    size_t eocd = std::string::npos;
    for (size_t i = bytes.size() - 22 + 1; i-- > scan_start;) {
        if (read_u32(bytes, i) == kEocdSig) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) throw NotAnArchive("end-of-central-directory not found");

    uint16_t entry_count = read_u16(bytes, eocd + 10);
    uint32_t cd_size = read_u32(bytes, eocd + 12);
    uint32_t cd_offset = read_u32(bytes, eocd + 16);
    if (entry_count == 0xFFFF || cd_offset == 0xFFFFFFFF)
        throw NotAnArchive("zip64 archives are not supported");
    if (static_cast<size_t>(cd_offset) + cd_size > bytes.size())
        throw NotAnArchive("central directory out of bounds");

    std::vector<Entry> entries;
    size_t pos = cd_offset;
    for (uint16_t n = 0; n < entry_count; ++n) {
        if (pos + 46 > bytes.size() || read_u32(bytes, pos) != kCentralSig)
            throw NotAnArchive("central directory entry is corrupt");
        uint16_t flags = read_u16(bytes, pos + 8);
        uint16_t method = read_u16(bytes, pos + 10);
        uint32_t crc = read_u32(bytes, pos + 16);
        uint32_t comp_size = read_u32(bytes, pos + 20);
        uint32_t uncomp_size = read_u32(bytes, pos + 24);
        uint16_t name_len = read_u16(bytes, pos + 28);
        uint16_t extra_len = read_u16(bytes, pos + 30);
        uint16_t comment_len = read_u16(bytes, pos + 32);
        uint32_t local_offset = read_u32(bytes, pos + 42);
        if (pos + 46 + name_len > bytes.size())
            throw NotAnArchive("central directory entry is corrupt");
        std::string name = bytes.substr(pos + 46, name_len);
        pos += 46 + name_len + extra_len + comment_len;

        if (!name.empty() && name.back() == '/') continue;  // directory entry

        if (flags & 0x1) throw MemberError(name, "encrypted members are not supported");
        if (local_offset + 30 > bytes.size() || read_u32(bytes, local_offset) != kLocalSig)
            throw MemberError(name, "local header is corrupt");
        uint16_t l_name_len = read_u16(bytes, local_offset + 26);
        uint16_t l_extra_len = read_u16(bytes, local_offset + 28);
        size_t data_off = static_cast<size_t>(local_offset) + 30 + l_name_len + l_extra_len;
        if (data_off + comp_size > bytes.size()) throw MemberError(name, "member data truncated");
        std::string raw = bytes.substr(data_off, comp_size);

        std::string data;
        if (method == 0) {
            if (comp_size != uncomp_size) throw MemberError(name, "stored member size mismatch");
            data = std::move(raw);
        } else if (method == 8) {
            data = inflate_raw(raw, uncomp_size, name);
        } else {
            throw MemberError(name, "unsupported compression method");
        }

        uint32_t actual_crc = static_cast<uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
        if (actual_crc != crc) throw MemberError(name, "CRC mismatch");

        entries.push_back({std::move(name), std::move(data)});
    }
    return entries;
}

}  // namespace fomgraph::zip
