#include "daamsep/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "daamsep/manifest.hpp"
#include "daamsep/overlay.hpp"
#include "daamsep/records_io.hpp"

namespace daamsep {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ThresholdPolicy> RunConfig::policies() const {
    std::vector<ThresholdPolicy> out;
    for (double t : fixed_thresholds) {
        out.push_back(ThresholdPolicy{PolicyKind::Fixed, t});
    }
    for (double p : percentile_thresholds) {
        out.push_back(ThresholdPolicy{PolicyKind::Percentile, p});
    }
    return out;
}

void RunConfig::validate() const {
    if (input_dir.empty()) {
        throw ConfigError("input_dir is required");
    }
    if (output_dir.empty()) {
        throw ConfigError("output_dir is required");
    }
    if (fixed_thresholds.empty() && percentile_thresholds.empty()) {
        throw ConfigError("threshold grid is empty");
    }
    try {
        for (const auto& p : policies()) {
            p.validate();
        }
        summary_policy.validate();
        upsample.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto all = policies();
    std::set<std::pair<int, double>> seen;
    for (const auto& p : all) {
        if (!seen.emplace(static_cast<int>(p.kind), p.value).second) {
            throw ConfigError("duplicate threshold " + p.label());
        }
    }
    if (parallelism == 0) {
        throw ConfigError("parallelism must be >= 1");
    }
    if (!write_csv && !write_json) {
        throw ConfigError("at least one report format is required");
    }
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "input_dir",       "output_dir",        "fixed_thresholds", "percentile_thresholds",
        "upsample",        "fuse_components",   "percentile_method", "parallelism",
        "formats",         "summary_policy",    "export_maps"};
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.contains(key)) {
                throw ConfigError("unknown config key \"" + key + "\"");
            }
        }
        if (j.contains("input_dir")) c.input_dir = j["input_dir"].get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("fixed_thresholds")) c.fixed_thresholds = j["fixed_thresholds"].get<std::vector<double>>();
        if (j.contains("percentile_thresholds")) {
            c.percentile_thresholds = j["percentile_thresholds"].get<std::vector<double>>();
        }
        if (j.contains("upsample")) {
            const auto& u = j["upsample"];
            c.upsample.a = u.value("a", c.upsample.a);
            c.upsample.clamp_negative = u.value("clamp_negative", c.upsample.clamp_negative);
            if (u.contains("alignment") && u["alignment"].get<std::string>() != "half_pixel_centers") {
                throw ConfigError("only half_pixel_centers alignment is supported");
            }
        }
        if (j.contains("fuse_components")) c.fuse_components = j["fuse_components"].get<bool>();
        if (j.contains("percentile_method")) {
            c.percentile_method = percentile_method_from_string(j["percentile_method"].get<std::string>());
        }
        if (j.contains("parallelism")) c.parallelism = j["parallelism"].get<std::size_t>();
        if (j.contains("formats")) {
            c.write_csv = c.write_json = false;
            for (const auto& f : j["formats"]) {
                const auto s = f.get<std::string>();
                if (s == "csv") {
                    c.write_csv = true;
                } else if (s == "json") {
                    c.write_json = true;
                } else {
                    throw ConfigError("unknown report format \"" + s + "\"");
                }
            }
        }
        if (j.contains("summary_policy")) c.summary_policy = parse_policy(j["summary_policy"].get<std::string>());
        if (j.contains("export_maps")) c.export_maps = j["export_maps"].get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json formats = json::array();
    if (c.write_csv) formats.push_back("csv");
    if (c.write_json) formats.push_back("json");
    return json{{"input_dir", c.input_dir.string()},
                {"output_dir", c.output_dir.string()},
                {"fixed_thresholds", c.fixed_thresholds},
                {"percentile_thresholds", c.percentile_thresholds},
                {"upsample", {{"a", c.upsample.a}, {"clamp_negative", c.upsample.clamp_negative},
                              {"alignment", "half_pixel_centers"}}},
                {"fuse_components", c.fuse_components},
                {"percentile_method", to_string(c.percentile_method)},
                {"parallelism", c.parallelism},
                {"formats", formats},
                {"summary_policy", c.summary_policy.label()},
                {"export_maps", c.export_maps}};
}

json conventions_meta(const RunConfig& c) {
    return json{
        {"upsample", {{"kernel", "cubic_convolution"}, {"a", c.upsample.a}, {"alignment", "half_pixel_centers"},
                      {"boundary", "edge_replicate"}, {"clamp_negative", c.upsample.clamp_negative}}},
        {"aggregation", "sum over all records of upsampled slices, double accumulation, then max-normalization"},
        {"component_fusion", c.fuse_components ? "sum_raw_then_normalize" : "first_token_of_span"},
        {"baseline_component_masks", c.fuse_components ? "fused" : "first_token_of_span"},
        {"baseline_excludes", "special tokens and both component spans; stopwords kept"},
        {"baseline_counterparts", "per_subtoken"},
        {"threshold_comparison", ">="},
        {"percentile_method", to_string(c.percentile_method)},
        {"empty_union_iou", "missing"},
        {"effect_size", kEffectSizeConvention},
        {"t_test", "paired, two-sided, d = miou_b - iou_cs"},
        {"sd", "sample (n-1)"},
        {"mean_support", "mean over images of (support_c + support_s) / 2"},
        {"summary_policy", c.summary_policy.label()},
    };
}

std::vector<PairRef> discover_pairs(const fs::path& input_dir) {
    if (!fs::is_directory(input_dir)) {
        throw std::runtime_error("input directory " + input_dir.string() + " does not exist");
    }
    std::vector<PairRef> out;
    const fs::path index = input_dir / "index.jsonl";
    if (fs::exists(index)) {
        std::ifstream in(index);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            json j;
            try {
                j = json::parse(line);
                out.push_back({j.value("id", std::to_string(n - 1)), input_dir / j.at("manifest").get<std::string>()});
            } catch (const json::exception& e) {
                throw std::runtime_error(index.string() + " line " + std::to_string(n) + ": " + e.what());
            }
        }
        return out;
    }
    if (fs::exists(input_dir / "manifest.json")) {
        out.push_back({input_dir.filename().string(), input_dir / "manifest.json"});
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(input_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        out.push_back({d.filename().string(), d / "manifest.json"});
    }
    return out;
}

namespace {

std::string describe(const ValidationReport& report) {
    std::string msg = "validation failed:";
    for (const auto& i : report.issues) {
        msg += std::string(" [") + to_string(i.kind) + "] " + i.message + ";";
    }
    return msg;
}

void export_pair_maps(const PairRef& ref, const Manifest& manifest, const ComponentMaps& components,
                      const RunConfig& config) {
    const fs::path dir = config.output_dir / "maps" / ref.id;
    fs::create_directories(dir);
    std::optional<fs::path> image;
    if (manifest.image_path) {
        const fs::path p = ref.manifest.parent_path() / *manifest.image_path;
        if (fs::exists(p)) {
            image = p;
        }
    }
    for (const auto& [name, map] : {std::pair{"content", &components.content}, std::pair{"style", &components.style}}) {
        write_dmap(*map, dir / (std::string(name) + ".dmap"));
        write_map_png(*map, dir / (std::string(name) + ".png"));
        render_overlay_file(image, *map, dir / (std::string(name) + "_overlay.png"));
    }
}

} // namespace

PairAnalysis analyze_pair(const PairRef& ref, const RunConfig& config) {
    const Manifest manifest = load_manifest(ref.manifest);
    const AttentionDump dump = read_dump_file(ref.manifest.parent_path() / manifest.dump_path);
    const auto report = validate_pair(dump, manifest);
    if (!report.ok()) {
        throw std::runtime_error(describe(report));
    }

    const auto raw = aggregate_all_tokens(dump, config.upsample);
    std::vector<AttributionMap> token_maps;
    token_maps.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        token_maps.push_back(normalize_map(raw[k], TokenSpan{k, k}));
    }

    PairAnalysis out;
    if (config.fuse_components) {
        out.components.content = fuse_raw(raw, manifest.content_span);
        out.components.style = fuse_raw(raw, manifest.style_span);
    } else {
        out.components.content = token_maps[manifest.content_span.first];
        out.components.style = token_maps[manifest.style_span.first];
    }

    // Sorted values are reused across percentile policies.
    std::vector<const AttributionMap*> maps{&out.components.content, &out.components.style};
    for (const auto& m : token_maps) {
        maps.push_back(&m);
    }
    std::vector<std::vector<double>> sorted;
    const bool any_percentile = !config.percentile_thresholds.empty();
    if (any_percentile) {
        sorted.reserve(maps.size());
        for (const auto* m : maps) {
            sorted.push_back(m->grid.values);
            std::sort(sorted.back().begin(), sorted.back().end());
        }
    }

    for (const auto& policy : config.policies()) {
        std::vector<BinaryMask> masks;
        masks.reserve(maps.size());
        for (std::size_t i = 0; i < maps.size(); ++i) {
            if (policy.kind == PolicyKind::Percentile) {
                if (maps[i]->degenerate) {
                    masks.push_back(threshold_mask(*maps[i], policy, config.percentile_method));
                } else {
                    masks.push_back(
                        mask_at(*maps[i], policy, percentile_sorted(sorted[i], policy.value, config.percentile_method)));
                }
            } else {
                masks.push_back(mask_at(*maps[i], policy, policy.value));
            }
        }
        auto rec = combine_masks(masks[0], masks[1], std::span<const BinaryMask>(masks).subspan(2), manifest, policy);
        rec.id = ref.id;
        out.records.push_back(std::move(rec));
    }

    if (config.export_maps) {
        export_pair_maps(ref, manifest, out.components, config);
    }
    return out;
}

RunReport run_pipeline(const RunConfig& config) {
    config.validate();
    RunReport report;
    const auto pairs = discover_pairs(config.input_dir);
    report.n_pairs = pairs.size();
    fs::create_directories(config.output_dir);

    struct Slot {
        std::vector<SeparationRecord> records;
        std::optional<std::string> error;
    };
    std::vector<Slot> slots(pairs.size());
    auto work = [&](std::size_t i) {
        try {
            slots[i].records = analyze_pair(pairs[i], config).records;
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    };

    const std::size_t workers = std::min(config.parallelism, std::max<std::size_t>(pairs.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < pairs.size(); i = next++) {
                    work(i);
                }
            });
        }
    }

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (slots[i].error) {
            report.errors.push_back({pairs[i].id, *slots[i].error});
        }
        for (auto& r : slots[i].records) {
            report.records.push_back(std::move(r));
        }
    }
    if (pairs.empty()) {
        report.errors.push_back({"", "no (manifest, dump) pairs found in " + config.input_dir.string()});
    }

    const auto policies = config.policies();
    report.sweep = threshold_sweep(report.records, policies);
    report.mean_effect_size = mean_effect_size(report.sweep);
    std::vector<SeparationRecord> at_summary;
    for (const auto& r : report.records) {
        if (r.policy == config.summary_policy) {
            at_summary.push_back(r);
        }
    }
    report.content_summaries = component_summaries(at_summary, GroupBy::Content);
    report.style_summaries = component_summaries(at_summary, GroupBy::Style);

    const fs::path& out = config.output_dir;
    if (config.write_csv) {
        std::ostringstream rec, sw, cs, ss;
        write_records_csv(report.records, rec);
        write_sweep_csv(report.sweep, sw);
        write_summaries_csv(report.content_summaries, cs);
        write_summaries_csv(report.style_summaries, ss);
        write_text_file(out / "records.csv", rec.str());
        write_text_file(out / "sweep.csv", sw.str());
        write_text_file(out / "summary_content.csv", cs.str());
        write_text_file(out / "summary_style.csv", ss.str());
    }
    if (config.write_json) {
        std::ostringstream rec;
        write_records_jsonl(report.records, rec);
        write_text_file(out / "records.jsonl", rec.str());
        write_text_file(out / "sweep.json", sweep_to_json(report.sweep).dump(2) + "\n");
        write_text_file(out / "summary_content.json", summaries_to_json(report.content_summaries).dump(2) + "\n");
        write_text_file(out / "summary_style.json", summaries_to_json(report.style_summaries).dump(2) + "\n");
    }
    write_text_file(out / "report.json", report_to_json(report, config).dump(2) + "\n");
    return report;
}

json report_to_json(const RunReport& report, const RunConfig& config) {
    json errors = json::array();
    for (const auto& e : report.errors) {
        errors.push_back({{"id", e.id}, {"error", e.message}});
    }
    json effect = {{"convention", kEffectSizeConvention},
                   {"mean_over_policies", report.mean_effect_size ? json(*report.mean_effect_size) : json(nullptr)}};
    json per_policy = json::array();
    for (const auto& p : report.sweep) {
        per_policy.push_back({{"policy", p.policy.label()},
                              {"effect_size", p.effect_size ? json(*p.effect_size) : json(nullptr)}});
    }
    effect["per_policy"] = std::move(per_policy);
    std::size_t n_missing = 0;
    for (const auto& r : report.records) {
        n_missing += r.delta ? 0 : 1;
    }
    return json{{"meta", conventions_meta(config)},
                {"n_pairs", report.n_pairs},
                {"n_pairs_ok", report.n_pairs - std::min(report.n_pairs, report.errors.size())},
                {"n_records", report.records.size()},
                {"n_records_missing_delta", n_missing},
                {"effect_size", std::move(effect)},
                {"errors", std::move(errors)},
                {"exit_code", report.exit_code()}};
}

} // namespace daamsep
