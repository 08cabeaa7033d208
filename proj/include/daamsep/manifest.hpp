#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "daamsep/dump_format.hpp"

namespace daamsep {

// Inclusive token-index range [first, last].
struct TokenSpan {
    std::size_t first = 0;
    std::size_t last = 0;

    [[nodiscard]] std::size_t length() const noexcept { return last >= first ? last - first + 1 : 0; }
    [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
    [[nodiscard]] bool overlaps(const TokenSpan& o) const noexcept { return first <= o.last && o.first <= last; }

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

enum class StyleKind { Artist, Movement };

const char* to_string(StyleKind kind);
StyleKind style_kind_from_string(const std::string& s);

struct Token {
    std::string text;
    bool special = false;
    // Half-open character range into the prompt; absent for special tokens.
    std::optional<std::pair<std::size_t, std::size_t>> offset;

    friend bool operator==(const Token&, const Token&) = default;
};

struct GenerationConfig {
    int steps = 0;
    double guidance = 0.0;
    std::string model_id;

    friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

struct Manifest {
    std::string prompt;
    int template_id = 1;
    std::vector<Token> tokens;
    TokenSpan content_span;
    TokenSpan style_span;
    std::string content_label;
    std::string style_label;
    StyleKind style_kind = StyleKind::Movement;
    GenerationConfig generation;
    std::string dump_path = "dump.bin";
    std::optional<std::string> image_path;

    [[nodiscard]] std::vector<bool> special_flags() const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

enum class IssueKind {
    SpanOutOfRange,
    EmptySpan,
    OverlappingSpans,
    SpecialTokenInSpan,
    TokenCountMismatch,
    InvalidTemplateId,
    DumpInvariant,
};

const char* to_string(IssueKind kind);

struct ValidationIssue {
    IssueKind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    [[nodiscard]] bool ok() const noexcept { return issues.empty(); }
    [[nodiscard]] std::size_t count(IssueKind kind) const;
};

// Never throws on bad input; every problem becomes a report entry.
ValidationReport validate_pair(const AttentionDump& dump, const Manifest& manifest);

} // namespace daamsep
