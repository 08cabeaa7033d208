#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "daamsep/daam.hpp"
#include "daamsep/masks.hpp"
#include "daamsep/stats.hpp"

namespace daamsep {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    std::vector<double> fixed_thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> percentile_thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    UpsampleSpec upsample;
    // When false, the first token of each span stands in for its component.
    bool fuse_components = true;
    PercentileMethod percentile_method = PercentileMethod::LinearSupportCapped;
    std::size_t parallelism = 1;
    bool write_csv = true;
    bool write_json = true;
    ThresholdPolicy summary_policy = ThresholdPolicy::fixed(0.4);
    bool export_maps = false;

    [[nodiscard]] std::vector<ThresholdPolicy> policies() const;
    // Throws ConfigError.
    void validate() const;
};

// Keys mirror the RunConfig field names. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json run_config_to_json(const RunConfig& c);

// Every convention choice that affects the numbers, for report metadata.
nlohmann::json conventions_meta(const RunConfig& c);

struct PairRef {
    std::string id;
    std::filesystem::path manifest;
};

// index.jsonl if present ({"id", "manifest"} per line), otherwise every
// subdirectory holding a manifest.json, sorted by name.
std::vector<PairRef> discover_pairs(const std::filesystem::path& input_dir);

struct PairError {
    std::string id;
    std::string message;
};

struct PairAnalysis {
    std::vector<SeparationRecord> records;
    ComponentMaps components;
};

// Loads, validates and analyses one pair at every policy.
PairAnalysis analyze_pair(const PairRef& ref, const RunConfig& config);

struct RunReport {
    std::size_t n_pairs = 0;
    std::vector<SeparationRecord> records; // pair order, then policy order
    std::vector<PairError> errors;
    std::vector<SweepPoint> sweep;
    std::vector<ComponentSummary> content_summaries;
    std::vector<ComponentSummary> style_summaries;
    std::optional<double> mean_effect_size;

    // 0 success, 1 partial failure or nothing analysed.
    [[nodiscard]] int exit_code() const noexcept { return errors.empty() && !records.empty() ? 0 : 1; }
};

// Runs the analysis and writes records, sweep, summaries and report.json
// into config.output_dir. Outputs do not depend on config.parallelism.
RunReport run_pipeline(const RunConfig& config);

nlohmann::json report_to_json(const RunReport& report, const RunConfig& config);

} // namespace daamsep
