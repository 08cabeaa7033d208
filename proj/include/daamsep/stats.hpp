#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "daamsep/masks.hpp"

namespace daamsep {

// Streaming mean/variance (Welford) with associative merging.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept;
    void merge(const RunningStats& other) noexcept;
    // Sample (n-1) variance; 0 when n < 2.
    [[nodiscard]] double variance() const noexcept;
    [[nodiscard]] double sd() const noexcept;
};

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

struct PairedSample {
    std::vector<std::pair<double, double>> pairs; // (iou_cs, miou_b)

    [[nodiscard]] std::size_t n() const noexcept { return pairs.size(); }
};

// Collects records where both IoU_CS and mIoU_B are present.
PairedSample paired_sample(std::span<const SeparationRecord> records);

enum class Alternative {
    TwoSided,
    Greater, // mean(miou_b - iou_cs) > 0
};

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    int df = 0;
    bool infinite_t = false; // zero spread with non-zero mean difference
};

// Differences are miou_b - iou_cs. Throws std::invalid_argument for n < 2.
TTestResult paired_t_test(const PairedSample& sample, Alternative alt = Alternative::TwoSided);

// |mean(miou_b) - mean(iou_cs)| / sqrt((var_cs + var_b) / 2).
// Missing when the pooled SD is zero. Throws std::invalid_argument for n < 2.
std::optional<double> effect_size(const PairedSample& sample);

inline constexpr const char* kEffectSizeConvention = "pooled_sd_of_series";

enum class GroupBy { Content, Style };

enum class ComponentKind { Content, Artist, Movement };

const char* to_string(ComponentKind kind);

struct ComponentSummary {
    std::string label;
    ComponentKind kind = ComponentKind::Content;
    double mean_delta = 0.0;
    double sd_delta = 0.0;
    std::size_t n = 0;
    bool single = false; // n == 1, sd reported as 0
};

// Sorted by mean_delta descending, then label ascending.
std::vector<ComponentSummary> component_summaries(std::span<const SeparationRecord> records, GroupBy group_by);

struct SweepPoint {
    ThresholdPolicy policy;
    bool present = false; // no records for this policy
    double mean_iou_cs = 0.0;
    double mean_miou_b = 0.0;
    double mean_delta = 0.0;
    double mean_support = 0.0; // mean of (support_c + support_s) / 2 over all records
    std::size_t n_images = 0;
    std::size_t n_missing = 0; // records without a delta
    std::optional<TTestResult> t_test;
    std::optional<double> effect_size;
};

// One point per requested policy, in request order. Means of the three IoU
// series are taken over records where delta is present.
std::vector<SweepPoint> threshold_sweep(std::span<const SeparationRecord> records,
                                        std::span<const ThresholdPolicy> policies);

// Simple mean of per-point effect sizes, skipping absent or degenerate points.
std::optional<double> mean_effect_size(std::span<const SweepPoint> points);

} // namespace daamsep
