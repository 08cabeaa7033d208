#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "daamsep/masks.hpp"
#include "daamsep/stats.hpp"

namespace daamsep {

// Column order of the per-record CSV.
inline constexpr const char* kRecordCsvHeader =
    "content,style,style_kind,template,policy_kind,policy_value,iou_cs,miou_b,delta,support_c,support_s,n_pairs,"
    "degenerate";

// Shortest round-trip decimal form; "" for missing values.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

std::string csv_escape(const std::string& field);

void to_json(nlohmann::json& j, const SeparationRecord& r);
void from_json(const nlohmann::json& j, SeparationRecord& r);

void write_records_csv(std::span<const SeparationRecord> records, std::ostream& out);
void write_records_jsonl(std::span<const SeparationRecord> records, std::ostream& out);

// Reads .jsonl or .csv depending on the extension.
std::vector<SeparationRecord> read_records(const std::filesystem::path& path);

void write_sweep_csv(std::span<const SweepPoint> points, std::ostream& out);
nlohmann::json sweep_to_json(std::span<const SweepPoint> points);

void write_summaries_csv(std::span<const ComponentSummary> summaries, std::ostream& out);
nlohmann::json summaries_to_json(std::span<const ComponentSummary> summaries);

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace daamsep
