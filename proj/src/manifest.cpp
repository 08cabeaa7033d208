#include "daamsep/manifest.hpp"

#include <fstream>
#include <sstream>

namespace daamsep {

using nlohmann::json;

const char* to_string(StyleKind kind) {
    return kind == StyleKind::Artist ? "artist" : "movement";
}

StyleKind style_kind_from_string(const std::string& s) {
    if (s == "artist") {
        return StyleKind::Artist;
    }
    if (s == "movement") {
        return StyleKind::Movement;
    }
    throw std::invalid_argument("style_kind must be \"artist\" or \"movement\", got \"" + s + "\"");
}

std::vector<bool> Manifest::special_flags() const {
    std::vector<bool> flags(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        flags[i] = tokens[i].special;
    }
    return flags;
}

namespace {

json span_to_json(const TokenSpan& s) { return json::array({s.first, s.last}); }

TokenSpan span_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2) {
        throw std::invalid_argument(std::string(name) + " must be a two-element array [start, end]");
    }
    return TokenSpan{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

} // namespace

void to_json(json& j, const Manifest& m) {
    json tokens = json::array();
    for (const auto& t : m.tokens) {
        json tj = {{"text", t.text}, {"special", t.special}};
        if (t.offset) {
            tj["offset"] = json::array({t.offset->first, t.offset->second});
        }
        tokens.push_back(std::move(tj));
    }
    j = json{
        {"prompt", m.prompt},
        {"template_id", m.template_id},
        {"tokens", std::move(tokens)},
        {"content_span", span_to_json(m.content_span)},
        {"style_span", span_to_json(m.style_span)},
        {"content_label", m.content_label},
        {"style_label", m.style_label},
        {"style_kind", to_string(m.style_kind)},
        {"generation", {{"steps", m.generation.steps}, {"guidance", m.generation.guidance},
                        {"model_id", m.generation.model_id}}},
        {"dump_path", m.dump_path},
    };
    if (m.image_path) {
        j["image_path"] = *m.image_path;
    }
}

void from_json(const json& j, Manifest& m) {
    m.prompt = j.at("prompt").get<std::string>();
    m.template_id = j.at("template_id").get<int>();
    m.tokens.clear();
    for (const auto& tj : j.at("tokens")) {
        Token t;
        if (tj.is_string()) {
            t.text = tj.get<std::string>();
        } else {
            t.text = tj.at("text").get<std::string>();
            t.special = tj.value("special", false);
            if (tj.contains("offset") && !tj["offset"].is_null()) {
                const auto& o = tj["offset"];
                t.offset = std::make_pair(o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>());
            }
        }
        m.tokens.push_back(std::move(t));
    }
    m.content_span = span_from_json(j.at("content_span"), "content_span");
    m.style_span = span_from_json(j.at("style_span"), "style_span");
    m.content_label = j.at("content_label").get<std::string>();
    m.style_label = j.at("style_label").get<std::string>();
    m.style_kind = style_kind_from_string(j.at("style_kind").get<std::string>());
    const auto& g = j.at("generation");
    m.generation.steps = g.value("steps", 0);
    m.generation.guidance = g.value("guidance", 0.0);
    m.generation.model_id = g.value("model_id", std::string{});
    m.dump_path = j.at("dump_path").get<std::string>();
    if (j.contains("image_path") && j["image_path"].is_string()) {
        m.image_path = j["image_path"].get<std::string>();
    } else {
        m.image_path.reset();
    }
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest " + path.string());
    }
    try {
        return json::parse(in).get<Manifest>();
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
    }
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << json(m).dump(2) << '\n';
}

const char* to_string(IssueKind kind) {
    switch (kind) {
    case IssueKind::SpanOutOfRange: return "span_out_of_range";
    case IssueKind::EmptySpan: return "empty_span";
    case IssueKind::OverlappingSpans: return "overlapping_spans";
    case IssueKind::SpecialTokenInSpan: return "special_token_in_span";
    case IssueKind::TokenCountMismatch: return "token_count_mismatch";
    case IssueKind::InvalidTemplateId: return "invalid_template_id";
    case IssueKind::DumpInvariant: return "dump_invariant";
    }
    return "unknown";
}

std::size_t ValidationReport::count(IssueKind kind) const {
    std::size_t n = 0;
    for (const auto& i : issues) {
        n += i.kind == kind ? 1 : 0;
    }
    return n;
}

ValidationReport validate_pair(const AttentionDump& dump, const Manifest& manifest) {
    ValidationReport report;
    auto add = [&](IssueKind kind, std::string msg) { report.issues.push_back({kind, std::move(msg)}); };

    try {
        check_dump(dump);
    } catch (const DumpError& e) {
        add(IssueKind::DumpInvariant, e.what());
    }

    const std::size_t n_tokens = dump.n_tokens;
    if (manifest.tokens.size() != n_tokens) {
        std::ostringstream os;
        os << "manifest lists " << manifest.tokens.size() << " tokens but dump has n_tokens = " << n_tokens;
        add(IssueKind::TokenCountMismatch, os.str());
    }
    if (manifest.template_id < 1 || manifest.template_id > 4) {
        add(IssueKind::InvalidTemplateId, "template_id " + std::to_string(manifest.template_id) + " not in 1..4");
    }

    bool spans_usable = true;
    auto check_span = [&](const TokenSpan& s, const char* name) {
        std::ostringstream os;
        os << name << " [" << s.first << ", " << s.last << "]";
        if (s.first > s.last) {
            add(IssueKind::EmptySpan, os.str() + " is empty");
            spans_usable = false;
            return;
        }
        if (s.last >= n_tokens) {
            add(IssueKind::SpanOutOfRange, os.str() + " outside [0, " + std::to_string(n_tokens) + ")");
            spans_usable = false;
            return;
        }
        for (std::size_t i = s.first; i <= s.last; ++i) {
            if (i < manifest.tokens.size() && manifest.tokens[i].special) {
                add(IssueKind::SpecialTokenInSpan,
                    os.str() + " includes special token " + std::to_string(i) + " \"" + manifest.tokens[i].text + "\"");
            }
        }
    };
    check_span(manifest.content_span, "content_span");
    check_span(manifest.style_span, "style_span");

    if (spans_usable && manifest.content_span.overlaps(manifest.style_span)) {
        add(IssueKind::OverlappingSpans, "content_span and style_span overlap");
    }
    return report;
}

} // namespace daamsep
