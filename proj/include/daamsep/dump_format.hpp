#pragma once

// Binary attention-dump format ("DAMX").
//
// Layout, all integers little-endian:
//   magic "DAMX" | version u32 | image_width u32 | image_height u32 |
//   n_tokens u32 | record_count u32 | seed u64 | model_id (u16 length + UTF-8) |
//   record_count x { layer_id u32 | timestep u32 | head u32 | height u32 |
//                    width u32 | height*width*n_tokens f32 }
// Record payloads are row-major with the token index varying fastest.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daamsep {

inline constexpr char kDumpMagic[4] = {'D', 'A', 'M', 'X'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpFixedHeaderBytes = 4 + 4 * 5 + 8 + 2;
inline constexpr std::size_t kRecordHeaderBytes = 4 * 5;

struct AttentionRecord {
    std::uint32_t layer_id = 0;
    std::uint32_t timestep = 0;
    std::uint32_t head = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> values; // height * width * n_tokens

    [[nodiscard]] float at(std::size_t y, std::size_t x, std::size_t token, std::size_t n_tokens) const {
        return values[(y * width + x) * n_tokens + token];
    }

    friend bool operator==(const AttentionRecord&, const AttentionRecord&) = default;
};

struct AttentionDump {
    std::uint32_t image_width = 0;
    std::uint32_t image_height = 0;
    std::uint32_t n_tokens = 0;
    std::uint64_t seed = 0;
    std::string model_id;
    std::vector<AttentionRecord> records;
};

// Bitwise equality on float payloads, so NaN patterns and signed zeros count.
bool bitwise_equal(const AttentionDump& a, const AttentionDump& b);

enum class DumpErrorKind {
    BadMagic,
    UnsupportedVersion,
    Truncated,
    TrailingBytes,
    ValueOutOfRange,
    NonFiniteValue,
    DuplicateRecord,
    InvalidDimension,
    EmptyDump,
    PayloadSizeMismatch,
    ModelIdTooLong,
    Io,
};

const char* to_string(DumpErrorKind kind);

class DumpError : public std::runtime_error {
public:
    DumpError(DumpErrorKind kind, std::size_t offset, const std::string& what)
        : std::runtime_error(what), kind_(kind), offset_(offset) {}

    [[nodiscard]] DumpErrorKind kind() const noexcept { return kind_; }
    // Byte offset into the file for read errors; 0 for in-memory checks.
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    DumpErrorKind kind_;
    std::size_t offset_;
};

// Throws DumpError on the first invariant violation.
void check_dump(const AttentionDump& dump);

// Exact encoded size of a dump, computed from its shape metadata alone.
std::size_t encoded_size(const AttentionDump& dump);

std::size_t write_dump(const AttentionDump& dump, std::ostream& out);
std::vector<std::byte> encode_dump(const AttentionDump& dump);
std::size_t write_dump_file(const AttentionDump& dump, const std::filesystem::path& path);

AttentionDump decode_dump(std::span<const std::byte> bytes);
AttentionDump read_dump(std::istream& in);
AttentionDump read_dump_file(const std::filesystem::path& path);

} // namespace daamsep
