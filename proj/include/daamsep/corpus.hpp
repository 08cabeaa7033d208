#pragma once

// Prompt corpus: four fixed templates crossed with content and style labels.
//   1: "a painting of a <CONTENT> in the <STYLE> style"
//   2: "a <STYLE> painting of a <CONTENT>"
//   3: "a <CONTENT> in the <STYLE> style"
//   4: "a <CONTENT> with <STYLE> style"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "daamsep/manifest.hpp"

namespace daamsep {

using CharSpan = std::pair<std::size_t, std::size_t>; // half-open [begin, end)

inline constexpr int kTemplateCount = 4;

std::string_view template_text(int template_id);

struct StyleDescriptor {
    std::string label;
    StyleKind kind = StyleKind::Movement;

    friend bool operator==(const StyleDescriptor&, const StyleDescriptor&) = default;
};

struct PromptSpec {
    std::size_t id = 0;
    int template_id = 1;
    std::string content_label;
    std::string style_label;
    StyleKind style_kind = StyleKind::Movement;
    std::string prompt_text;
    CharSpan content_char_span;
    CharSpan style_char_span;
};

void to_json(nlohmann::json& j, const PromptSpec& p);
void from_json(const nlohmann::json& j, PromptSpec& p);

struct RenderOptions {
    // Use "an" before labels starting with a vowel. Off by default: the
    // templates are fixed strings and changing them shifts token counts.
    bool fix_articles = false;
};

PromptSpec render_prompt(int template_id, const std::string& content_label, const std::string& style_label,
                         StyleKind style_kind = StyleKind::Movement, const RenderOptions& options = {});

// Bundled lists: 80 MS-COCO classes, 50 WikiArt styles (23 artists, 27 movements).
std::vector<std::string> bundled_contents();
std::vector<StyleDescriptor> bundled_styles();

// Plain-text list files; '#' starts a comment line. Styles are "label<TAB>kind".
std::vector<std::string> parse_content_list(std::string_view text);
std::vector<StyleDescriptor> parse_style_list(std::string_view text);
std::vector<std::string> load_content_list(const std::filesystem::path& path);
std::vector<StyleDescriptor> load_style_list(const std::filesystem::path& path);

// Full cross product ordered by (template, content, style) with ids 0..N-1.
// Throws std::invalid_argument listing duplicates if any input repeats.
std::vector<PromptSpec> generate_corpus(const std::vector<std::string>& contents,
                                        const std::vector<StyleDescriptor>& styles, const std::vector<int>& templates,
                                        const RenderOptions& options = {});

void write_corpus_index(const std::vector<PromptSpec>& corpus, const std::filesystem::path& path);
std::vector<PromptSpec> read_corpus_index(const std::filesystem::path& path);

class TokenizationMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpanAnnotation {
    std::vector<Token> tokens;
    TokenSpan content_span;
    TokenSpan style_span;
};

// Finds the token ranges whose character coverage tiles each component's
// character span exactly (whitespace between tokens is allowed).
TokenSpan token_span_for(const std::vector<Token>& tokens, CharSpan chars, const std::string& prompt);

SpanAnnotation annotate_token_spans(const PromptSpec& spec, const std::vector<Token>& tokens);

// Manifest for a prompt with annotated tokens; generation and dump_path are left for the caller.
Manifest manifest_fragment(const PromptSpec& spec, const SpanAnnotation& annotation);

namespace detail {
std::string_view bundled_contents_text();
std::string_view bundled_styles_text();
} // namespace detail

} // namespace daamsep
