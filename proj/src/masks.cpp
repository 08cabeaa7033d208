#include "daamsep/masks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace daamsep {

const char* to_string(PolicyKind kind) { return kind == PolicyKind::Fixed ? "fixed" : "percentile"; }

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "fixed") {
        return PolicyKind::Fixed;
    }
    if (s == "percentile") {
        return PolicyKind::Percentile;
    }
    throw std::invalid_argument("policy kind must be \"fixed\" or \"percentile\", got \"" + s + "\"");
}

ThresholdPolicy ThresholdPolicy::fixed(double tau) {
    ThresholdPolicy p{PolicyKind::Fixed, tau};
    p.validate();
    return p;
}

ThresholdPolicy ThresholdPolicy::percentile(double p) {
    ThresholdPolicy pol{PolicyKind::Percentile, p};
    pol.validate();
    return pol;
}

void ThresholdPolicy::validate() const {
    if (kind == PolicyKind::Fixed && !(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("fixed threshold must be within [0, 1]");
    }
    if (kind == PolicyKind::Percentile && !(value > 0.0 && value < 1.0)) {
        throw std::invalid_argument("percentile must be within (0, 1)");
    }
}

std::string ThresholdPolicy::label() const {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(to_string(kind)) + ":" + std::string(buf, end);
}

ThresholdPolicy parse_policy(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("policy \"" + text + "\" must look like fixed:0.4 or percentile:0.7");
    }
    ThresholdPolicy p;
    p.kind = policy_kind_from_string(text.substr(0, colon));
    const std::string num = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), p.value);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
        throw std::invalid_argument("policy \"" + text + "\" has a malformed value");
    }
    p.validate();
    return p;
}

namespace {

std::vector<ThresholdPolicy> grid(PolicyKind kind) {
    std::vector<ThresholdPolicy> g;
    for (int i = 1; i <= 9; ++i) {
        g.push_back(ThresholdPolicy{kind, i / 10.0});
    }
    return g;
}

} // namespace

std::vector<ThresholdPolicy> fixed_grid() { return grid(PolicyKind::Fixed); }
std::vector<ThresholdPolicy> percentile_grid() { return grid(PolicyKind::Percentile); }

const char* to_string(PercentileMethod m) {
    return m == PercentileMethod::Linear ? "linear" : "linear_support_capped";
}

PercentileMethod percentile_method_from_string(const std::string& s) {
    if (s == "linear") {
        return PercentileMethod::Linear;
    }
    if (s == "linear_support_capped") {
        return PercentileMethod::LinearSupportCapped;
    }
    throw std::invalid_argument("unknown percentile method \"" + s + "\"");
}

double percentile_sorted(std::span<const double> sorted, double p, PercentileMethod method) {
    const std::size_t n = sorted.size();
    if (n == 0) {
        throw std::invalid_argument("percentile of an empty set");
    }
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    double tau = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    tau = std::min(tau, sorted[hi]);
    if (method == PercentileMethod::LinearSupportCapped) {
        // The small epsilon absorbs decimal p values like 0.7 being stored
        // just below their nominal value.
        const auto k = std::min(n - 1, static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9)));
        tau = std::min(tau, sorted[k]);
    }
    return tau;
}

BinaryMask mask_at(const AttributionMap& map, const ThresholdPolicy& policy, double tau) {
    BinaryMask m;
    m.width = map.width();
    m.height = map.height();
    m.policy = policy;
    m.threshold = tau;
    m.bits.resize(map.grid.values.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        const bool on = map.grid.values[i] >= tau;
        m.bits[i] = on ? 1 : 0;
        m.support += on ? 1 : 0;
    }
    return m;
}

double percentile_value(std::span<const double> values, double p, PercentileMethod method) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p, method);
}

BinaryMask threshold_mask(const AttributionMap& map, const ThresholdPolicy& policy, PercentileMethod method) {
    policy.validate();
    if (policy.kind == PolicyKind::Fixed) {
        return mask_at(map, policy, policy.value);
    }
    if (map.degenerate) {
        BinaryMask m;
        m.width = map.width();
        m.height = map.height();
        m.policy = policy;
        m.bits.assign(map.grid.values.size(), 0);
        m.threshold = std::numeric_limits<double>::quiet_NaN();
        m.degenerate_warning = true;
        return m;
    }
    const double tau = percentile_value(map.grid.values, policy.value, method);
    return mask_at(map, policy, tau);
}

BinaryMask make_mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits, ThresholdPolicy policy) {
    if (bits.size() != width * height) {
        throw std::invalid_argument("make_mask: bit count does not match dimensions");
    }
    BinaryMask m;
    m.width = width;
    m.height = height;
    m.policy = policy;
    m.bits = std::move(bits);
    for (auto& b : m.bits) {
        b = b != 0 ? 1 : 0;
        m.support += b;
    }
    return m;
}

std::optional<double> iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("iou: mask dimensions differ (" + std::to_string(a.width) + "x" +
                                    std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height) + ")");
    }
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    if (uni == 0) {
        return std::nullopt;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BaselineResult baseline_miou(const BinaryMask& content, const BinaryMask& style,
                             std::span<const BinaryMask> token_masks, TokenSpan content_span, TokenSpan style_span,
                             const std::vector<bool>& special_flags) {
    BaselineResult r;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t w = 0; w < token_masks.size(); ++w) {
        if (content_span.contains(w) || style_span.contains(w)) {
            continue;
        }
        if (w < special_flags.size() && special_flags[w]) {
            continue;
        }
        for (const BinaryMask* component : {&content, &style}) {
            ++r.n_pairs;
            if (auto v = iou(*component, token_masks[w])) {
                sum += *v;
                ++defined;
            } else {
                ++r.n_undefined;
            }
        }
    }
    if (defined > 0) {
        r.miou = sum / static_cast<double>(defined);
    }
    return r;
}

SeparationRecord combine_masks(const BinaryMask& content, const BinaryMask& style,
                               std::span<const BinaryMask> token_masks, const Manifest& manifest,
                               const ThresholdPolicy& policy) {
    SeparationRecord rec;
    rec.content_label = manifest.content_label;
    rec.style_label = manifest.style_label;
    rec.style_kind = manifest.style_kind;
    rec.template_id = manifest.template_id;
    rec.policy = policy;
    rec.support_c = content.support;
    rec.support_s = style.support;

    const auto baseline = baseline_miou(content, style, token_masks, manifest.content_span, manifest.style_span,
                                        manifest.special_flags());
    rec.n_pairs = baseline.n_pairs;

    if (content.support == 0 && style.support == 0) {
        rec.degenerate = true;
        rec.note = "content and style masks are both empty";
        return rec;
    }
    rec.iou_cs = iou(content, style);
    rec.miou_b = baseline.miou;
    if (!rec.miou_b) {
        rec.note = baseline.n_pairs == 0 ? "no eligible baseline pairs" : "all baseline pairs undefined";
    } else if (baseline.n_undefined > 0) {
        rec.note = std::to_string(baseline.n_undefined) + " baseline pairs undefined";
    }
    if (rec.iou_cs && rec.miou_b) {
        rec.delta = *rec.miou_b - *rec.iou_cs;
    }
    return rec;
}

SeparationRecord separation_record(const ComponentMaps& components, std::span<const AttributionMap> token_maps,
                                   const Manifest& manifest, const ThresholdPolicy& policy, PercentileMethod method) {
    const BinaryMask content = threshold_mask(components.content, policy, method);
    const BinaryMask style = threshold_mask(components.style, policy, method);
    std::vector<BinaryMask> token_masks;
    token_masks.reserve(token_maps.size());
    for (const auto& m : token_maps) {
        token_masks.push_back(threshold_mask(m, policy, method));
    }
    return combine_masks(content, style, token_masks, manifest, policy);
}

} // namespace daamsep
