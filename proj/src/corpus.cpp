#include "daamsep/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace daamsep {

using nlohmann::json;

namespace {

constexpr std::string_view kTemplates[kTemplateCount] = {
    "a painting of a <CONTENT> in the <STYLE> style",
    "a <STYLE> painting of a <CONTENT>",
    "a <CONTENT> in the <STYLE> style",
    "a <CONTENT> with <STYLE> style",
};

constexpr std::string_view kContentSlot = "<CONTENT>";
constexpr std::string_view kStyleSlot = "<STYLE>";

void check_label(const std::string& label, const char* what) {
    if (label.empty()) {
        throw std::invalid_argument(std::string(what) + " label is empty");
    }
    for (char c : label) {
        if (c == '\n' || c == '\r' || c == '<' || c == '>') {
            throw std::invalid_argument(std::string(what) + " label \"" + label +
                                        "\" contains a template-breaking character");
        }
    }
}

bool starts_with_vowel(const std::string& s) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s.front())));
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> content_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (trim(line).empty() || trim(line).front() == '#') {
            continue;
        }
        lines.push_back(line);
    }
    return lines;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json char_span_json(const CharSpan& s) { return json::array({s.first, s.second}); }

} // namespace

std::string_view template_text(int template_id) {
    if (template_id < 1 || template_id > kTemplateCount) {
        throw std::invalid_argument("template_id must be 1..4, got " + std::to_string(template_id));
    }
    return kTemplates[template_id - 1];
}

PromptSpec render_prompt(int template_id, const std::string& content_label, const std::string& style_label,
                         StyleKind style_kind, const RenderOptions& options) {
    const std::string_view tpl = template_text(template_id);
    check_label(content_label, "content");
    check_label(style_label, "style");

    PromptSpec spec;
    spec.template_id = template_id;
    spec.content_label = content_label;
    spec.style_label = style_label;
    spec.style_kind = style_kind;

    std::string& out = spec.prompt_text;
    std::size_t i = 0;
    while (i < tpl.size()) {
        const bool content = tpl.substr(i, kContentSlot.size()) == kContentSlot;
        const bool style = !content && tpl.substr(i, kStyleSlot.size()) == kStyleSlot;
        if (!content && !style) {
            out.push_back(tpl[i++]);
            continue;
        }
        const std::string& label = content ? content_label : style_label;
        if (options.fix_articles && starts_with_vowel(label) && out.size() >= 2 &&
            out.compare(out.size() - 2, 2, "a ") == 0 && (out.size() == 2 || out[out.size() - 3] == ' ')) {
            out.insert(out.size() - 1, "n");
        }
        const CharSpan span{out.size(), out.size() + label.size()};
        out += label;
        (content ? spec.content_char_span : spec.style_char_span) = span;
        i += content ? kContentSlot.size() : kStyleSlot.size();
    }

    auto slice = [&](const CharSpan& s) { return out.substr(s.first, s.second - s.first); };
    if (slice(spec.content_char_span) != content_label || slice(spec.style_char_span) != style_label) {
        throw std::logic_error("render_prompt: character spans do not reproduce the labels");
    }
    return spec;
}

std::vector<std::string> parse_content_list(std::string_view text) {
    std::vector<std::string> out;
    for (auto line : content_lines(text)) {
        out.emplace_back(trim(line));
    }
    return out;
}

std::vector<StyleDescriptor> parse_style_list(std::string_view text) {
    std::vector<StyleDescriptor> out;
    for (auto line : content_lines(text)) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw std::invalid_argument("style list line \"" + std::string(line) + "\" lacks a <TAB>kind column");
        }
        out.push_back({std::string(trim(line.substr(0, tab))),
                       style_kind_from_string(std::string(trim(line.substr(tab + 1))))});
    }
    return out;
}

std::vector<std::string> bundled_contents() { return parse_content_list(detail::bundled_contents_text()); }

std::vector<StyleDescriptor> bundled_styles() { return parse_style_list(detail::bundled_styles_text()); }

std::vector<std::string> load_content_list(const std::filesystem::path& path) {
    return parse_content_list(read_text(path));
}

std::vector<StyleDescriptor> load_style_list(const std::filesystem::path& path) {
    return parse_style_list(read_text(path));
}

std::vector<PromptSpec> generate_corpus(const std::vector<std::string>& contents,
                                        const std::vector<StyleDescriptor>& styles, const std::vector<int>& templates,
                                        const RenderOptions& options) {
    if (contents.empty() || styles.empty() || templates.empty()) {
        throw std::invalid_argument("generate_corpus: contents, styles and templates must be non-empty");
    }
    std::vector<std::string> dups;
    auto find_dups = [&](const auto& items, auto key, const char* what) {
        std::set<std::string> seen;
        for (const auto& item : items) {
            const std::string k = key(item);
            if (!seen.insert(k).second) {
                dups.push_back(std::string(what) + " \"" + k + "\"");
            }
        }
    };
    find_dups(contents, [](const std::string& s) { return s; }, "content");
    find_dups(styles, [](const StyleDescriptor& s) { return s.label; }, "style");
    find_dups(templates, [](int t) { return std::to_string(t); }, "template");
    if (!dups.empty()) {
        std::string msg = "generate_corpus: duplicate inputs:";
        for (const auto& d : dups) {
            msg += " " + d;
        }
        throw std::invalid_argument(msg);
    }

    std::vector<PromptSpec> corpus;
    corpus.reserve(templates.size() * contents.size() * styles.size());
    for (int t : templates) {
        for (const auto& c : contents) {
            for (const auto& s : styles) {
                auto spec = render_prompt(t, c, s.label, s.kind, options);
                spec.id = corpus.size();
                corpus.push_back(std::move(spec));
            }
        }
    }
    return corpus;
}

void to_json(json& j, const PromptSpec& p) {
    j = json{{"id", p.id},
             {"template_id", p.template_id},
             {"content_label", p.content_label},
             {"style_label", p.style_label},
             {"style_kind", to_string(p.style_kind)},
             {"prompt_text", p.prompt_text},
             {"content_char_span", char_span_json(p.content_char_span)},
             {"style_char_span", char_span_json(p.style_char_span)}};
}

void from_json(const json& j, PromptSpec& p) {
    p.id = j.at("id").get<std::size_t>();
    p.template_id = j.at("template_id").get<int>();
    p.content_label = j.at("content_label").get<std::string>();
    p.style_label = j.at("style_label").get<std::string>();
    p.style_kind = style_kind_from_string(j.at("style_kind").get<std::string>());
    p.prompt_text = j.at("prompt_text").get<std::string>();
    const auto& cs = j.at("content_char_span");
    const auto& ss = j.at("style_char_span");
    p.content_char_span = {cs.at(0).get<std::size_t>(), cs.at(1).get<std::size_t>()};
    p.style_char_span = {ss.at(0).get<std::size_t>(), ss.at(1).get<std::size_t>()};
}

void write_corpus_index(const std::vector<PromptSpec>& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (const auto& p : corpus) {
        out << json(p).dump() << '\n';
    }
}

std::vector<PromptSpec> read_corpus_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<PromptSpec> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            out.push_back(json::parse(line).get<PromptSpec>());
        }
    }
    return out;
}

TokenSpan token_span_for(const std::vector<Token>& tokens, CharSpan chars, const std::string& prompt) {
    std::optional<std::size_t> first;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.special || !t.offset) {
            continue;
        }
        const auto [b, e] = *t.offset;
        const bool overlaps = b < chars.second && chars.first < e;
        if (!overlaps) {
            continue;
        }
        if (b < chars.first || e > chars.second) {
            std::ostringstream os;
            os << "token " << i << " \"" << t.text << "\" at [" << b << ", " << e << ") straddles the span ["
               << chars.first << ", " << chars.second << ")";
            throw TokenizationMismatch(os.str());
        }
        if (!first) {
            first = i;
        }
        if (last && *last + 1 != i) {
            throw TokenizationMismatch("tokens covering [" + std::to_string(chars.first) + ", " +
                                       std::to_string(chars.second) + ") are not contiguous");
        }
        last = i;
    }
    if (!first) {
        throw TokenizationMismatch("no token covers characters [" + std::to_string(chars.first) + ", " +
                                   std::to_string(chars.second) + ")");
    }
    // Coverage must tile the span: gaps between tokens are whitespace only.
    std::size_t cursor = chars.first;
    for (std::size_t i = *first; i <= *last; ++i) {
        const auto [b, e] = *tokens[i].offset;
        for (std::size_t c = cursor; c < b; ++c) {
            if (c >= prompt.size() || !std::isspace(static_cast<unsigned char>(prompt[c]))) {
                throw TokenizationMismatch("character " + std::to_string(c) + " of the span is not covered by any token");
            }
        }
        if (b < cursor) {
            throw TokenizationMismatch("token offsets overlap at character " + std::to_string(b));
        }
        cursor = e;
    }
    if (cursor != chars.second) {
        throw TokenizationMismatch("tokens end at " + std::to_string(cursor) + " but the span ends at " +
                                   std::to_string(chars.second));
    }
    return TokenSpan{*first, *last};
}

SpanAnnotation annotate_token_spans(const PromptSpec& spec, const std::vector<Token>& tokens) {
    SpanAnnotation a;
    a.tokens = tokens;
    a.content_span = token_span_for(tokens, spec.content_char_span, spec.prompt_text);
    a.style_span = token_span_for(tokens, spec.style_char_span, spec.prompt_text);
    return a;
}

Manifest manifest_fragment(const PromptSpec& spec, const SpanAnnotation& annotation) {
    Manifest m;
    m.prompt = spec.prompt_text;
    m.template_id = spec.template_id;
    m.tokens = annotation.tokens;
    m.content_span = annotation.content_span;
    m.style_span = annotation.style_span;
    m.content_label = spec.content_label;
    m.style_label = spec.style_label;
    m.style_kind = spec.style_kind;
    return m;
}

} // namespace daamsep
