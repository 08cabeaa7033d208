#pragma once

// Binary masks from attribution maps and the IoU-based separation metrics:
//   IoU_CS  overlap of the content and style masks
//   mIoU_B  mean IoU over every (C or S, other token) pair
//   delta   mIoU_B - IoU_CS, positive when C and S occupy distinct regions

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daamsep/daam.hpp"
#include "daamsep/manifest.hpp"

namespace daamsep {

enum class PolicyKind { Fixed, Percentile };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

struct ThresholdPolicy {
    PolicyKind kind = PolicyKind::Fixed;
    double value = 0.4; // tau for fixed, p for percentile

    static ThresholdPolicy fixed(double tau);
    static ThresholdPolicy percentile(double p);

    void validate() const;
    [[nodiscard]] std::string label() const; // e.g. "fixed:0.4"

    friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

// Parses "fixed:0.4" or "percentile:0.7".
ThresholdPolicy parse_policy(const std::string& text);

// The nine-point grids {0.1, ..., 0.9} for each policy kind.
std::vector<ThresholdPolicy> fixed_grid();
std::vector<ThresholdPolicy> percentile_grid();

enum class PercentileMethod {
    // Linear interpolation between order statistics at rank p*(n-1).
    Linear,
    // Linear, capped at the order statistic of rank floor(p*n) so that at
    // least (1-p)*n values are >= the threshold for every n.
    LinearSupportCapped,
};

const char* to_string(PercentileMethod m);
PercentileMethod percentile_method_from_string(const std::string& s);

double percentile_value(std::span<const double> values, double p, PercentileMethod method);
// Same, for values already sorted ascending.
double percentile_sorted(std::span<const double> sorted, double p, PercentileMethod method);

struct BinaryMask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> bits;
    ThresholdPolicy policy;
    double threshold = 0.0; // resolved tau
    std::size_t support = 0;
    bool degenerate_warning = false; // percentile policy on an all-zero map

    [[nodiscard]] bool at(std::size_t x, std::size_t y) const { return bits[y * width + x] != 0; }
};

BinaryMask threshold_mask(const AttributionMap& map, const ThresholdPolicy& policy,
                          PercentileMethod method = PercentileMethod::LinearSupportCapped);

// Mask of map values >= tau, recording policy as provenance.
BinaryMask mask_at(const AttributionMap& map, const ThresholdPolicy& policy, double tau);

// Builds a mask from explicit bits; support is recounted.
BinaryMask make_mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits,
                     ThresholdPolicy policy = {});

// Missing when the union is empty.
std::optional<double> iou(const BinaryMask& a, const BinaryMask& b);

struct BaselineResult {
    std::optional<double> miou;
    std::size_t n_pairs = 0;     // eligible (component, token) pairs
    std::size_t n_undefined = 0; // pairs whose union was empty
};

// Pairs each component mask with every token outside both spans that is
// not flagged special. token_masks is indexed by token position.
BaselineResult baseline_miou(const BinaryMask& content, const BinaryMask& style,
                             std::span<const BinaryMask> token_masks, TokenSpan content_span, TokenSpan style_span,
                             const std::vector<bool>& special_flags);

struct SeparationRecord {
    std::string id; // pair identifier within a run; empty for ad-hoc records
    std::string content_label;
    std::string style_label;
    StyleKind style_kind = StyleKind::Movement;
    int template_id = 1;
    ThresholdPolicy policy;
    std::optional<double> iou_cs;
    std::optional<double> miou_b;
    std::optional<double> delta;
    std::size_t support_c = 0;
    std::size_t support_s = 0;
    std::size_t n_pairs = 0;
    bool degenerate = false;
    std::string note;
};

struct ComponentMaps {
    AttributionMap content;
    AttributionMap style;
};

// token_maps holds one normalized map per token position (special tokens
// included; they are skipped by the baseline).
SeparationRecord separation_record(const ComponentMaps& components, std::span<const AttributionMap> token_maps,
                                   const Manifest& manifest, const ThresholdPolicy& policy,
                                   PercentileMethod method = PercentileMethod::LinearSupportCapped);

// Combines precomputed masks into a record; used by separation_record.
SeparationRecord combine_masks(const BinaryMask& content, const BinaryMask& style,
                               std::span<const BinaryMask> token_masks, const Manifest& manifest,
                               const ThresholdPolicy& policy);

} // namespace daamsep
