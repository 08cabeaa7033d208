#include "daamsep/dump_format.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <tuple>

namespace daamsep {

namespace {

std::string record_name(const AttentionRecord& r) {
    std::ostringstream os;
    os << "(layer " << r.layer_id << ", timestep " << r.timestep << ", head " << r.head << ")";
    return os.str();
}

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::byte*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
        }
    }
    std::vector<std::byte>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n) {
            std::ostringstream os;
            os << "truncated " << what << " at offset " << pos_ << ": expected " << (pos_ + n)
               << " bytes, got " << bytes_.size();
            throw DumpError(DumpErrorKind::Truncated, pos_, os.str());
        }
    }

    std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
    std::uint64_t u64(const char* what) { return le(8, what); }

    std::span<const std::byte> take(std::size_t n, const char* what) {
        require(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::uint64_t le(int n, const char* what) {
        require(static_cast<std::size_t>(n), what);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

std::size_t payload_count(const AttentionRecord& r, std::uint32_t n_tokens) {
    return static_cast<std::size_t>(r.height) * r.width * n_tokens;
}

} // namespace

const char* to_string(DumpErrorKind kind) {
    switch (kind) {
    case DumpErrorKind::BadMagic: return "bad_magic";
    case DumpErrorKind::UnsupportedVersion: return "unsupported_version";
    case DumpErrorKind::Truncated: return "truncated";
    case DumpErrorKind::TrailingBytes: return "trailing_bytes";
    case DumpErrorKind::ValueOutOfRange: return "value_out_of_range";
    case DumpErrorKind::NonFiniteValue: return "non_finite_value";
    case DumpErrorKind::DuplicateRecord: return "duplicate_record";
    case DumpErrorKind::InvalidDimension: return "invalid_dimension";
    case DumpErrorKind::EmptyDump: return "empty_dump";
    case DumpErrorKind::PayloadSizeMismatch: return "payload_size_mismatch";
    case DumpErrorKind::ModelIdTooLong: return "model_id_too_long";
    case DumpErrorKind::Io: return "io";
    }
    return "unknown";
}

bool bitwise_equal(const AttentionDump& a, const AttentionDump& b) {
    if (a.image_width != b.image_width || a.image_height != b.image_height || a.n_tokens != b.n_tokens ||
        a.seed != b.seed || a.model_id != b.model_id || a.records.size() != b.records.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        if (std::tie(ra.layer_id, ra.timestep, ra.head, ra.height, ra.width) !=
                std::tie(rb.layer_id, rb.timestep, rb.head, rb.height, rb.width) ||
            ra.values.size() != rb.values.size()) {
            return false;
        }
        if (!ra.values.empty() &&
            std::memcmp(ra.values.data(), rb.values.data(), ra.values.size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

void check_dump(const AttentionDump& dump) {
    if (dump.records.empty()) {
        throw DumpError(DumpErrorKind::EmptyDump, 0, "dump has no records");
    }
    if (dump.n_tokens == 0 || dump.image_width == 0 || dump.image_height == 0) {
        throw DumpError(DumpErrorKind::InvalidDimension, 0, "image dimensions and n_tokens must be >= 1");
    }
    if (dump.model_id.size() > 0xffffu) {
        throw DumpError(DumpErrorKind::ModelIdTooLong, 0, "model_id exceeds 65535 bytes");
    }
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
    for (const auto& r : dump.records) {
        if (r.height == 0 || r.width == 0) {
            throw DumpError(DumpErrorKind::InvalidDimension, 0, "zero spatial size in record " + record_name(r));
        }
        if (r.values.size() != payload_count(r, dump.n_tokens)) {
            std::ostringstream os;
            os << "record " << record_name(r) << " holds " << r.values.size() << " values, expected "
               << payload_count(r, dump.n_tokens);
            throw DumpError(DumpErrorKind::PayloadSizeMismatch, 0, os.str());
        }
        if (!seen.emplace(r.layer_id, r.timestep, r.head).second) {
            throw DumpError(DumpErrorKind::DuplicateRecord, 0, "duplicate record " + record_name(r));
        }
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            const float v = r.values[i];
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "non-finite value in record " << record_name(r) << " at flat index " << i;
                throw DumpError(DumpErrorKind::NonFiniteValue, 0, os.str());
            }
            if (v < 0.0f || v > 1.0f) {
                std::ostringstream os;
                os << "value " << v << " outside [0, 1] in record " << record_name(r) << " at flat index " << i;
                throw DumpError(DumpErrorKind::ValueOutOfRange, 0, os.str());
            }
        }
    }
}

std::size_t encoded_size(const AttentionDump& dump) {
    std::size_t n = kDumpFixedHeaderBytes + dump.model_id.size();
    for (const auto& r : dump.records) {
        n += kRecordHeaderBytes + payload_count(r, dump.n_tokens) * sizeof(float);
    }
    return n;
}

std::vector<std::byte> encode_dump(const AttentionDump& dump) {
    check_dump(dump);
    std::vector<std::byte> out;
    out.reserve(encoded_size(dump));
    ByteWriter w(out);
    w.raw(kDumpMagic, 4);
    w.u32(kDumpVersion);
    w.u32(dump.image_width);
    w.u32(dump.image_height);
    w.u32(dump.n_tokens);
    w.u32(static_cast<std::uint32_t>(dump.records.size()));
    w.u64(dump.seed);
    w.u16(static_cast<std::uint16_t>(dump.model_id.size()));
    w.raw(dump.model_id.data(), dump.model_id.size());
    for (const auto& r : dump.records) {
        w.u32(r.layer_id);
        w.u32(r.timestep);
        w.u32(r.head);
        w.u32(r.height);
        w.u32(r.width);
        if constexpr (std::endian::native == std::endian::little) {
            w.raw(r.values.data(), r.values.size() * sizeof(float));
        } else {
            for (float v : r.values) {
                w.f32(v);
            }
        }
    }
    return out;
}

std::size_t write_dump(const AttentionDump& dump, std::ostream& out) {
    const auto bytes = encode_dump(dump);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DumpError(DumpErrorKind::Io, 0, "failed to write dump stream");
    }
    return bytes.size();
}

std::size_t write_dump_file(const AttentionDump& dump, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DumpError(DumpErrorKind::Io, 0, "cannot open " + path.string() + " for writing");
    }
    return write_dump(dump, out);
}

AttentionDump decode_dump(std::span<const std::byte> bytes) {
    ByteReader r(bytes);
    // A file that is a strict prefix of the magic is truncated, not foreign.
    if (std::memcmp(bytes.data(), kDumpMagic, std::min<std::size_t>(bytes.size(), 4)) != 0) {
        throw DumpError(DumpErrorKind::BadMagic, 0, "bad magic at offset 0: expected \"DAMX\"");
    }
    r.take(4, "magic");

    const std::size_t version_offset = r.offset();
    const std::uint32_t version = r.u32("header");
    if (version != kDumpVersion) {
        throw DumpError(DumpErrorKind::UnsupportedVersion, version_offset,
                        "unsupported format version " + std::to_string(version) + " at offset " +
                            std::to_string(version_offset));
    }

    AttentionDump dump;
    const std::size_t dims_offset = r.offset();
    dump.image_width = r.u32("header");
    dump.image_height = r.u32("header");
    dump.n_tokens = r.u32("header");
    const std::uint32_t record_count = r.u32("header");
    dump.seed = r.u64("header");
    const std::uint16_t model_len = r.u16("header");
    const auto model_bytes = r.take(model_len, "model_id");
    dump.model_id.assign(reinterpret_cast<const char*>(model_bytes.data()), model_bytes.size());

    if (dump.image_width == 0 || dump.image_height == 0 || dump.n_tokens == 0) {
        throw DumpError(DumpErrorKind::InvalidDimension, dims_offset,
                        "zero image dimension or token count at offset " + std::to_string(dims_offset));
    }
    if (record_count == 0) {
        throw DumpError(DumpErrorKind::EmptyDump, dims_offset + 12, "record_count is zero");
    }

    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
    dump.records.reserve(record_count);
    for (std::uint32_t i = 0; i < record_count; ++i) {
        const std::size_t rec_offset = r.offset();
        AttentionRecord rec;
        rec.layer_id = r.u32("record header");
        rec.timestep = r.u32("record header");
        rec.head = r.u32("record header");
        rec.height = r.u32("record header");
        rec.width = r.u32("record header");
        if (rec.height == 0 || rec.width == 0) {
            throw DumpError(DumpErrorKind::InvalidDimension, rec_offset,
                            "zero spatial size in record " + record_name(rec) + " at offset " +
                                std::to_string(rec_offset));
        }
        if (!seen.emplace(rec.layer_id, rec.timestep, rec.head).second) {
            throw DumpError(DumpErrorKind::DuplicateRecord, rec_offset,
                            "duplicate record " + record_name(rec) + " at offset " + std::to_string(rec_offset));
        }
        const std::size_t count = payload_count(rec, dump.n_tokens);
        const std::size_t payload_offset = r.offset();
        const auto payload = r.take(count * sizeof(float), "record payload");
        rec.values.resize(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                bits |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(payload[k * 4 + b])) << (8 * b);
            }
            const float v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) {
                const std::size_t at = payload_offset + k * 4;
                throw DumpError(DumpErrorKind::NonFiniteValue, at,
                                "non-finite value in record " + record_name(rec) + " at offset " +
                                    std::to_string(at));
            }
            if (v < 0.0f || v > 1.0f) {
                const std::size_t at = payload_offset + k * 4;
                throw DumpError(DumpErrorKind::ValueOutOfRange, at,
                                "value outside [0, 1] in record " + record_name(rec) + " at offset " +
                                    std::to_string(at));
            }
            rec.values[k] = v;
        }
        dump.records.push_back(std::move(rec));
    }

    if (r.remaining() != 0) {
        throw DumpError(DumpErrorKind::TrailingBytes, r.offset(),
                        std::to_string(r.remaining()) + " unexpected bytes after last record at offset " +
                            std::to_string(r.offset()));
    }
    return dump;
}

AttentionDump read_dump(std::istream& in) {
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw DumpError(DumpErrorKind::Io, 0, "failed to read dump stream");
    }
    return decode_dump(std::as_bytes(std::span<const char>(buf)));
}

AttentionDump read_dump_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DumpError(DumpErrorKind::Io, 0, "cannot open " + path.string());
    }
    return read_dump(in);
}

} // namespace daamsep
