#include "daamsep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "daamsep/corpus.hpp"
#include "daamsep/records_io.hpp"

namespace daamsep {

Region Region::rect(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, double intensity) {
    Region r;
    r.shape = RegionShape::Rect;
    r.x0 = x0;
    r.y0 = y0;
    r.x1 = x1;
    r.y1 = y1;
    r.intensity = intensity;
    return r;
}

Region Region::uniform(double intensity) {
    Region r;
    r.shape = RegionShape::Uniform;
    r.intensity = intensity;
    return r;
}

Region Region::blob(double cx, double cy, double sigma, double intensity) {
    Region r;
    r.shape = RegionShape::Blob;
    r.cx = cx;
    r.cy = cy;
    r.sigma = sigma;
    r.intensity = intensity;
    return r;
}

void SyntheticSceneSpec::validate() const {
    if (latent_w == 0 || latent_h == 0 || scale == 0 || n_layers == 0 || n_timesteps == 0 || n_heads == 0) {
        throw std::invalid_argument("synthetic scene: sizes and counts must be >= 1");
    }
    if (!(noise >= 0.0)) {
        throw std::invalid_argument("synthetic scene: noise amplitude must be >= 0");
    }
    if (tokens.empty()) {
        throw std::invalid_argument("synthetic scene: no tokens");
    }
    for (const auto& t : tokens) {
        for (const auto& r : t.regions) {
            if (r.shape == RegionShape::Rect && (r.x0 >= r.x1 || r.y0 >= r.y1 || r.x1 > latent_w || r.y1 > latent_h)) {
                throw std::invalid_argument("synthetic scene: rectangle for token \"" + t.text + "\" out of bounds");
            }
            if (r.shape == RegionShape::Blob && !(r.sigma > 0.0)) {
                throw std::invalid_argument("synthetic scene: blob sigma must be positive");
            }
            if (!(r.intensity >= 0.0 && r.intensity <= 1.0)) {
                throw std::invalid_argument("synthetic scene: region intensity must be within [0, 1]");
            }
        }
    }
    if (content_span.first > content_span.last || style_span.first > style_span.last ||
        content_span.last >= tokens.size() || style_span.last >= tokens.size() || content_span.overlaps(style_span)) {
        throw std::invalid_argument("synthetic scene: invalid component spans");
    }
    policy.validate();
}

namespace {

// Latent-resolution intensity field of one token, clamped to [0, 1].
std::vector<double> token_field(const SyntheticToken& token, std::size_t w, std::size_t h) {
    std::vector<double> f(w * h, 0.0);
    for (const auto& r : token.regions) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double v = 0.0;
                switch (r.shape) {
                case RegionShape::Uniform: v = r.intensity; break;
                case RegionShape::Rect:
                    v = (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1) ? r.intensity : 0.0;
                    break;
                case RegionShape::Blob: {
                    const double dx = static_cast<double>(x) + 0.5 - r.cx;
                    const double dy = static_cast<double>(y) + 0.5 - r.cy;
                    v = r.intensity * std::exp(-(dx * dx + dy * dy) / (2.0 * r.sigma * r.sigma));
                    break;
                }
                }
                f[y * w + x] += v;
            }
        }
    }
    for (double& v : f) {
        v = std::min(v, 1.0);
    }
    return f;
}

double record_factor(std::size_t index) { return 0.4 + 0.6 * static_cast<double>((index * 37) % 11) / 10.0; }

// Uniform in [-1, 1) from raw engine output, independent of the standard
// library's distribution implementations.
double unit_noise(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Ideal image-resolution mask of a normalized field at the given policy.
std::vector<std::uint8_t> ideal_mask(const std::vector<double>& latent, std::size_t lw, std::size_t lh,
                                     std::size_t scale, const ThresholdPolicy& policy) {
    const std::size_t w = lw * scale;
    const std::size_t h = lh * scale;
    std::vector<double> img(w * h);
    double peak = 0.0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            img[y * w + x] = latent[(y / scale) * lw + x / scale];
            peak = std::max(peak, img[y * w + x]);
        }
    }
    std::vector<std::uint8_t> bits(w * h, 0);
    if (peak == 0.0) {
        if (policy.kind == PolicyKind::Fixed && policy.value == 0.0) {
            std::fill(bits.begin(), bits.end(), 1);
        }
        return bits;
    }
    for (double& v : img) {
        v /= peak;
    }
    double tau = policy.value;
    if (policy.kind == PolicyKind::Percentile) {
        std::vector<double> s = img;
        std::sort(s.begin(), s.end());
        const std::size_t n = s.size();
        const double pos = policy.value * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        tau = std::min(s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]), s[hi]);
        const auto k = std::min(n - 1, static_cast<std::size_t>(std::floor(policy.value * static_cast<double>(n) + 1e-9)));
        tau = std::min(tau, s[k]);
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        bits[i] = img[i] >= tau ? 1 : 0;
    }
    return bits;
}

std::vector<double> sum_fields(const std::vector<std::vector<double>>& fields, TokenSpan span) {
    std::vector<double> s(fields.front().size(), 0.0);
    for (std::size_t k = span.first; k <= span.last; ++k) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] += fields[k][i];
        }
    }
    return s;
}

std::optional<double> count_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a[i] && b[i]) ? 1 : 0;
        uni += (a[i] || b[i]) ? 1 : 0;
    }
    if (uni == 0) {
        return std::nullopt;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t popcount(const std::vector<std::uint8_t>& bits) {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

} // namespace

SyntheticFixture synth_fixture(const SyntheticSceneSpec& spec) {
    spec.validate();
    const std::size_t lw = spec.latent_w;
    const std::size_t lh = spec.latent_h;
    const std::size_t n_tokens = spec.tokens.size();

    std::vector<std::vector<double>> fields;
    fields.reserve(n_tokens);
    for (const auto& t : spec.tokens) {
        fields.push_back(token_field(t, lw, lh));
    }

    SyntheticFixture fx;
    AttentionDump& dump = fx.dump;
    dump.image_width = static_cast<std::uint32_t>(lw * spec.scale);
    dump.image_height = static_cast<std::uint32_t>(lh * spec.scale);
    dump.n_tokens = static_cast<std::uint32_t>(n_tokens);
    dump.seed = spec.seed;
    dump.model_id = "synthetic";

    std::mt19937_64 rng(spec.seed);
    std::size_t index = 0;
    for (std::uint32_t layer = 0; layer < spec.n_layers; ++layer) {
        for (std::uint32_t step = 0; step < spec.n_timesteps; ++step) {
            for (std::uint32_t head = 0; head < spec.n_heads; ++head, ++index) {
                AttentionRecord r;
                r.layer_id = layer;
                r.timestep = step;
                r.head = head;
                r.width = static_cast<std::uint32_t>(lw);
                r.height = static_cast<std::uint32_t>(lh);
                r.values.resize(lw * lh * n_tokens);
                const double factor = record_factor(index);
                for (std::size_t p = 0; p < lw * lh; ++p) {
                    for (std::size_t k = 0; k < n_tokens; ++k) {
                        double v = fields[k][p] * factor;
                        if (spec.noise > 0.0) {
                            v += spec.noise * unit_noise(rng);
                        }
                        r.values[p * n_tokens + k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
                    }
                }
                dump.records.push_back(std::move(r));
            }
        }
    }

    Manifest& m = fx.manifest;
    m.prompt = spec.prompt;
    m.template_id = spec.template_id;
    m.content_span = spec.content_span;
    m.style_span = spec.style_span;
    m.content_label = spec.content_label;
    m.style_label = spec.style_label;
    m.style_kind = spec.style_kind;
    m.generation = GenerationConfig{static_cast<int>(spec.n_timesteps), 0.0, "synthetic"};
    m.dump_path = "dump.bin";
    std::size_t cursor = 0;
    for (const auto& t : spec.tokens) {
        Token tok{t.text, t.special, std::nullopt};
        if (!t.special) {
            const auto at = spec.prompt.find(t.text, cursor);
            if (at != std::string::npos) {
                tok.offset = std::make_pair(at, at + t.text.size());
                cursor = at + t.text.size();
            }
        }
        m.tokens.push_back(std::move(tok));
    }

    // Expected record by direct pixel counting on the ideal fields.
    const auto content_bits = ideal_mask(sum_fields(fields, spec.content_span), lw, lh, spec.scale, spec.policy);
    const auto style_bits = ideal_mask(sum_fields(fields, spec.style_span), lw, lh, spec.scale, spec.policy);
    SeparationRecord& e = fx.expected;
    e.content_label = spec.content_label;
    e.style_label = spec.style_label;
    e.style_kind = spec.style_kind;
    e.template_id = spec.template_id;
    e.policy = spec.policy;
    e.support_c = popcount(content_bits);
    e.support_s = popcount(style_bits);
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < n_tokens; ++k) {
        if (spec.content_span.contains(k) || spec.style_span.contains(k) || spec.tokens[k].special) {
            continue;
        }
        const auto bits = ideal_mask(fields[k], lw, lh, spec.scale, spec.policy);
        for (const auto* comp : {&content_bits, &style_bits}) {
            ++e.n_pairs;
            if (auto v = count_iou(*comp, bits)) {
                sum += *v;
                ++defined;
            }
        }
    }
    if (e.support_c == 0 && e.support_s == 0) {
        e.degenerate = true;
        e.note = "content and style masks are both empty";
        return fx;
    }
    e.iou_cs = count_iou(content_bits, style_bits);
    if (defined > 0) {
        e.miou_b = sum / static_cast<double>(defined);
    }
    if (e.iou_cs && e.miou_b) {
        e.delta = *e.miou_b - *e.iou_cs;
    }
    return fx;
}

const char* to_string(SceneKind kind) {
    switch (kind) {
    case SceneKind::Disjoint: return "disjoint";
    case SceneKind::Entangled: return "entangled";
    case SceneKind::HalfOverlap: return "half-overlap";
    }
    return "unknown";
}

SceneKind scene_kind_from_string(const std::string& s) {
    for (auto k : {SceneKind::Disjoint, SceneKind::Entangled, SceneKind::HalfOverlap}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown scene \"" + s + "\" (disjoint, entangled, half-overlap)");
}

SyntheticSceneSpec preset_scene(SceneKind kind, int template_id, const std::string& content_label,
                                const std::string& style_label, StyleKind style_kind, std::uint32_t latent_size) {
    if (latent_size < 8 || latent_size % 8 != 0) {
        throw std::invalid_argument("preset_scene: latent size must be a positive multiple of 8");
    }
    const auto prompt = render_prompt(template_id, content_label, style_label, style_kind);
    SyntheticSceneSpec s;
    s.latent_w = s.latent_h = latent_size;
    s.prompt = prompt.prompt_text;
    s.content_label = content_label;
    s.style_label = style_label;
    s.style_kind = style_kind;
    s.template_id = template_id;

    const std::size_t L = latent_size;
    Region content_region;
    Region style_region;
    Region other_region = Region::uniform(0.5);
    switch (kind) {
    case SceneKind::Disjoint:
        content_region = Region::rect(0, 0, L / 2, L);
        style_region = Region::rect(L / 2, 0, L, L);
        break;
    case SceneKind::Entangled:
        content_region = style_region = other_region = Region::rect(L / 4, L / 4, 3 * L / 4, 3 * L / 4);
        break;
    case SceneKind::HalfOverlap:
        content_region = Region::rect(L / 8, L / 4, L / 8 + L / 2, 3 * L / 4);
        style_region = Region::rect(3 * L / 8, L / 4, 3 * L / 8 + L / 2, 3 * L / 4);
        break;
    }

    s.tokens.push_back({"<|startoftext|>", true, {Region::uniform(1.0)}});
    std::optional<std::size_t> c_first, c_last, s_first, s_last;
    std::size_t pos = 0;
    const std::string& text = prompt.prompt_text;
    while (pos < text.size()) {
        const auto end = std::min(text.find(' ', pos), text.size());
        const std::size_t idx = s.tokens.size();
        SyntheticToken tok{text.substr(pos, end - pos), false, {other_region}};
        if (pos >= prompt.content_char_span.first && end <= prompt.content_char_span.second) {
            tok.regions = {content_region};
            c_first = c_first.value_or(idx);
            c_last = idx;
        } else if (pos >= prompt.style_char_span.first && end <= prompt.style_char_span.second) {
            tok.regions = {style_region};
            s_first = s_first.value_or(idx);
            s_last = idx;
        }
        s.tokens.push_back(std::move(tok));
        pos = end + 1;
    }
    s.tokens.push_back({"<|endoftext|>", true, {Region::uniform(1.0)}});
    s.content_span = TokenSpan{*c_first, *c_last};
    s.style_span = TokenSpan{*s_first, *s_last};
    return s;
}

void write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_dump_file(fixture.dump, dir / fixture.manifest.dump_path);
    save_manifest(fixture.manifest, dir / "manifest.json");
    write_text_file(dir / "expected.json", nlohmann::json(fixture.expected).dump(2) + "\n");
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& out_dir,
                                                          const SyntheticCorpusOptions& options) {
    if (options.scenes.empty()) {
        throw std::invalid_argument("synthetic corpus: no scene kinds");
    }
    std::filesystem::create_directories(out_dir);
    const auto contents = bundled_contents();
    const auto styles = bundled_styles();
    std::vector<std::filesystem::path> dirs;
    std::ostringstream index;
    for (std::size_t i = 0; i < options.count; ++i) {
        const auto kind = options.scenes[i % options.scenes.size()];
        const auto& style = styles[(i * 7) % styles.size()];
        auto spec = preset_scene(kind, static_cast<int>(i % 4) + 1, contents[(i * 3) % contents.size()], style.label,
                                 style.kind, options.latent_size);
        spec.scale = options.scale;
        spec.noise = options.noise;
        spec.seed = options.seed + i;
        char name[32];
        std::snprintf(name, sizeof name, "pair_%03zu", i);
        write_fixture(synth_fixture(spec), out_dir / name);
        dirs.push_back(out_dir / name);
        index << nlohmann::json{{"id", name}, {"manifest", std::string(name) + "/manifest.json"}}.dump() << '\n';
    }
    write_text_file(out_dir / "index.jsonl", index.str());
    return dirs;
}

} // namespace daamsep
