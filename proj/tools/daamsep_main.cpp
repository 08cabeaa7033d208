// daamsep command-line tool.
//
// Exit codes: 0 success, 1 partial failure (some pairs or files failed, or
// validation found issues), 2 invalid configuration or arguments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "daamsep/corpus.hpp"
#include "daamsep/daam.hpp"
#include "daamsep/dump_format.hpp"
#include "daamsep/manifest.hpp"
#include "daamsep/overlay.hpp"
#include "daamsep/pipeline.hpp"
#include "daamsep/records_io.hpp"
#include "daamsep/stats.hpp"
#include "daamsep/synth.hpp"

using namespace daamsep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::vector<ThresholdPolicy> parse_policy_list(const std::vector<std::string>& items) {
    std::vector<ThresholdPolicy> out;
    for (const auto& s : items) {
        try {
            out.push_back(parse_policy(s));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    return out;
}

// Writes to `out` when given, else stdout; JSON or CSV chosen by extension.
void emit(const std::optional<fs::path>& out, const std::string& csv, const json& j) {
    if (!out) {
        std::cout << csv;
        return;
    }
    write_text_file(*out, out->extension() == ".json" ? j.dump(2) + "\n" : csv);
}

// ---- corpus gen -----------------------------------------------------------

struct CorpusArgs {
    std::optional<fs::path> contents;
    std::optional<fs::path> styles;
    std::vector<int> templates{1, 2, 3, 4};
    fs::path out;
    bool fix_articles = false;
};

int run_corpus_gen(const CorpusArgs& a) {
    const auto contents = a.contents ? load_content_list(*a.contents) : bundled_contents();
    const auto styles = a.styles ? load_style_list(*a.styles) : bundled_styles();
    RenderOptions opts;
    opts.fix_articles = a.fix_articles;
    std::vector<PromptSpec> corpus;
    try {
        corpus = generate_corpus(contents, styles, a.templates, opts);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    fs::create_directories(a.out);
    write_corpus_index(corpus, a.out / "corpus.jsonl");
    std::cout << corpus.size() << " prompts (" << contents.size() << " contents x " << styles.size()
              << " styles x " << a.templates.size() << " templates) -> " << (a.out / "corpus.jsonl").string() << "\n";
    return kExitOk;
}

// ---- validate -------------------------------------------------------------

int run_validate(const std::vector<fs::path>& inputs) {
    std::size_t n_ok = 0;
    std::size_t n_bad = 0;
    for (const auto& input : inputs) {
        std::vector<PairRef> pairs;
        if (fs::is_regular_file(input)) {
            pairs.push_back({input.parent_path().filename().string(), input});
        } else {
            pairs = discover_pairs(input);
        }
        for (const auto& ref : pairs) {
            std::vector<std::string> problems;
            try {
                const auto manifest = load_manifest(ref.manifest);
                const auto dump = read_dump_file(ref.manifest.parent_path() / manifest.dump_path);
                for (const auto& issue : validate_pair(dump, manifest).issues) {
                    problems.push_back(std::string("[") + to_string(issue.kind) + "] " + issue.message);
                }
            } catch (const DumpError& e) {
                problems.push_back(std::string("[dump:") + to_string(e.kind()) + "] " + e.what());
            } catch (const std::exception& e) {
                problems.push_back(std::string("[manifest] ") + e.what());
            }
            if (problems.empty()) {
                ++n_ok;
                std::cout << "ok      " << ref.id << "\n";
            } else {
                ++n_bad;
                for (const auto& p : problems) {
                    std::cout << "invalid " << ref.id << ": " << p << "\n";
                }
            }
        }
    }
    std::cout << n_ok << " valid, " << n_bad << " invalid\n";
    return n_bad == 0 && n_ok > 0 ? kExitOk : kExitPartial;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
    std::optional<fs::path> config;
    std::optional<fs::path> input;
    std::optional<fs::path> output;
    std::optional<std::vector<double>> fixed;
    std::optional<std::vector<double>> percentile;
    std::optional<std::size_t> jobs;
    std::optional<std::string> percentile_method;
    std::optional<std::string> summary_policy;
    std::optional<std::vector<std::string>> formats;
    std::optional<double> a;
    bool no_clamp = false;
    bool no_fuse = false;
    bool export_maps = false;
    bool print_config = false;
};

RunConfig build_config(const AnalyzeArgs& args) {
    json j = json::object();
    if (args.config) {
        std::ifstream in(*args.config);
        if (!in) {
            throw ConfigError("cannot open config " + args.config->string());
        }
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + args.config->string() + ": " + e.what());
        }
    }
    RunConfig c = run_config_from_json(j);
    if (args.input) c.input_dir = *args.input;
    if (args.output) c.output_dir = *args.output;
    if (args.fixed) c.fixed_thresholds = *args.fixed;
    if (args.percentile) c.percentile_thresholds = *args.percentile;
    if (args.jobs) c.parallelism = *args.jobs;
    if (args.a) c.upsample.a = *args.a;
    if (args.no_clamp) c.upsample.clamp_negative = false;
    if (args.no_fuse) c.fuse_components = false;
    if (args.export_maps) c.export_maps = true;
    // Remaining string-typed overrides go through the JSON reader for uniform checking.
    json overrides = json::object();
    if (args.percentile_method) overrides["percentile_method"] = *args.percentile_method;
    if (args.summary_policy) overrides["summary_policy"] = *args.summary_policy;
    if (args.formats) overrides["formats"] = *args.formats;
    c = run_config_from_json(overrides, c);
    c.validate();
    return c;
}

int run_analyze(const AnalyzeArgs& args) {
    const RunConfig config = build_config(args);
    if (args.print_config) {
        std::cout << run_config_to_json(config).dump(2) << "\n";
        return kExitOk;
    }
    const auto report = run_pipeline(config);
    std::cout << report.n_pairs << " pairs, " << report.records.size() << " records, " << report.errors.size()
              << " errors -> " << config.output_dir.string() << "\n";
    for (const auto& e : report.errors) {
        std::cerr << "error: " << (e.id.empty() ? "" : e.id + ": ") << e.message << "\n";
    }
    for (const auto& p : report.sweep) {
        if (p.policy == config.summary_policy && p.present) {
            std::cout << p.policy.label() << ": mean IoU_CS " << format_number(p.mean_iou_cs) << ", mean mIoU_B "
                      << format_number(p.mean_miou_b) << ", mean delta " << format_number(p.mean_delta);
            if (p.t_test) {
                std::cout << ", t " << format_number(p.t_test->t) << ", p " << format_number(p.t_test->p);
            }
            std::cout << "\n";
        }
    }
    return report.exit_code();
}

// ---- sweep / summarize ----------------------------------------------------

std::vector<ThresholdPolicy> policies_in(const std::vector<SeparationRecord>& records) {
    std::vector<ThresholdPolicy> out;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.policy) == out.end()) {
            out.push_back(r.policy);
        }
    }
    return out;
}

int run_sweep(const fs::path& records_path, const std::vector<std::string>& policy_args,
              const std::optional<fs::path>& out) {
    const auto records = read_records(records_path);
    const auto policies = policy_args.empty() ? policies_in(records) : parse_policy_list(policy_args);
    const auto points = threshold_sweep(records, policies);
    std::ostringstream csv;
    write_sweep_csv(points, csv);
    json j = sweep_to_json(points);
    emit(out, csv.str(), j);
    bool all_present = true;
    for (const auto& p : points) {
        all_present &= p.present;
    }
    return records.empty() || !all_present ? kExitPartial : kExitOk;
}

int run_summarize(const fs::path& records_path, const std::string& policy_text, const std::string& by,
                  const std::optional<fs::path>& out) {
    if (by != "content" && by != "style") {
        throw ConfigError("--by must be content or style");
    }
    const auto policy = parse_policy_list({policy_text}).front();
    std::vector<SeparationRecord> selected;
    for (const auto& r : read_records(records_path)) {
        if (r.policy == policy) {
            selected.push_back(r);
        }
    }
    const auto summaries = component_summaries(selected, by == "content" ? GroupBy::Content : GroupBy::Style);
    std::ostringstream csv;
    write_summaries_csv(summaries, csv);
    json j = {{"policy", policy.label()}, {"group_by", by}, {"components", summaries_to_json(summaries)}};
    const auto sample = paired_sample(selected);
    if (sample.n() >= 2) {
        const auto t = paired_t_test(sample);
        const auto d = effect_size(sample);
        j["t_test"] = {{"t", t.t}, {"df", t.df}, {"p", t.p}};
        j["effect_size"] = d ? json(*d) : json(nullptr);
        std::cerr << policy.label() << ": n " << sample.n() << ", t " << format_number(t.t) << ", p "
                  << format_number(t.p) << ", effect size " << (d ? format_number(*d) : "n/a") << "\n";
    }
    emit(out, csv.str(), j);
    return summaries.empty() ? kExitPartial : kExitOk;
}

// ---- overlay --------------------------------------------------------------

struct OverlayArgs {
    std::optional<fs::path> manifest;
    std::optional<fs::path> map;
    std::string component = "content";
    std::optional<fs::path> image;
    double opacity = 0.6;
    fs::path out;
};

int run_overlay(const OverlayArgs& a) {
    if (a.manifest.has_value() == a.map.has_value()) {
        throw ConfigError("give exactly one of --manifest or --map");
    }
    AttributionMap map;
    std::optional<fs::path> image = a.image;
    if (a.map) {
        map = read_dmap(*a.map);
    } else {
        const auto manifest = load_manifest(*a.manifest);
        const auto dump = read_dump_file(a.manifest->parent_path() / manifest.dump_path);
        const auto report = validate_pair(dump, manifest);
        if (!report.ok()) {
            throw std::runtime_error(std::string("invalid pair: ") + report.issues.front().message);
        }
        TokenSpan span;
        if (a.component == "content") {
            span = manifest.content_span;
        } else if (a.component == "style") {
            span = manifest.style_span;
        } else if (a.component.rfind("token:", 0) == 0) {
            const std::size_t k = std::stoul(a.component.substr(6));
            span = {k, k};
        } else {
            throw ConfigError("--component must be content, style or token:N");
        }
        map = fuse_span(dump, span, UpsampleSpec{}, manifest.special_flags());
        if (!image && manifest.image_path) {
            const auto p = a.manifest->parent_path() / *manifest.image_path;
            if (fs::exists(p)) {
                image = p;
            }
        }
    }
    OverlayOptions opts;
    opts.opacity = a.opacity;
    render_overlay_file(image, map, a.out, opts);
    std::cout << "wrote " << a.out.string() << "\n";
    return kExitOk;
}

// ---- synth ----------------------------------------------------------------

int run_synth(const fs::path& out, SyntheticCorpusOptions opts, const std::vector<std::string>& scenes) {
    if (!scenes.empty()) {
        opts.scenes.clear();
        for (const auto& s : scenes) {
            try {
                opts.scenes.push_back(scene_kind_from_string(s));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    const auto dirs = write_synthetic_corpus(out, opts);
    std::cout << dirs.size() << " synthetic pairs -> " << out.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Content/style separation metrics over diffusion cross-attention dumps"};
    app.require_subcommand(1);
    int exit_code = kExitOk;

    // corpus gen
    CorpusArgs corpus_args;
    auto* corpus = app.add_subcommand("corpus", "Prompt corpus tools");
    corpus->require_subcommand(1);
    auto* gen = corpus->add_subcommand("gen", "Generate the templated prompt corpus");
    gen->add_option("--contents", corpus_args.contents, "Content label list (default: bundled COCO-80)");
    gen->add_option("--styles", corpus_args.styles, "Style list, label<TAB>artist|movement (default: bundled)");
    gen->add_option("--templates", corpus_args.templates, "Template ids")->delimiter(',')->check(CLI::Range(1, 4));
    gen->add_option("--out", corpus_args.out, "Output directory")->required();
    gen->add_flag("--fix-articles", corpus_args.fix_articles, "Use \"an\" before vowel-initial labels");
    gen->callback([&] { exit_code = run_corpus_gen(corpus_args); });

    // validate
    std::vector<fs::path> validate_inputs;
    auto* validate = app.add_subcommand("validate", "Check (manifest, dump) pairs");
    validate->add_option("inputs", validate_inputs, "Pair directories, corpus directories or manifest files")
        ->required();
    validate->callback([&] { exit_code = run_validate(validate_inputs); });

    // analyze
    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Run the full pipeline over a corpus directory");
    analyze->add_option("--config", an.config, "JSON config mirroring RunConfig");
    analyze->add_option("--input", an.input, "Input directory");
    analyze->add_option("--output", an.output, "Output directory");
    analyze->add_option("--fixed", an.fixed, "Fixed thresholds, e.g. 0.3,0.4")->delimiter(',');
    analyze->add_option("--percentile", an.percentile, "Percentile levels")->delimiter(',');
    analyze->add_option("-j,--jobs", an.jobs, "Worker threads");
    analyze->add_option("--percentile-method", an.percentile_method, "linear | linear_support_capped");
    analyze->add_option("--summary-policy", an.summary_policy, "Policy for component summaries, e.g. fixed:0.4");
    analyze->add_option("--formats", an.formats, "csv,json")->delimiter(',');
    analyze->add_option("--cubic-a", an.a, "Cubic convolution coefficient");
    analyze->add_flag("--no-clamp", an.no_clamp, "Keep negative bicubic overshoot");
    analyze->add_flag("--no-fuse", an.no_fuse, "Use the first token of each span instead of fusing");
    analyze->add_flag("--export-maps", an.export_maps, "Write component maps and overlays per pair");
    analyze->add_flag("--print-config", an.print_config, "Print the effective config and exit");
    analyze->callback([&] { exit_code = run_analyze(an); });

    // sweep
    fs::path sweep_records;
    std::vector<std::string> sweep_policies;
    std::optional<fs::path> sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Threshold sweep from a records file");
    sweep->add_option("--records", sweep_records, "records.csv or records.jsonl")->required();
    sweep->add_option("--policies", sweep_policies, "e.g. fixed:0.4,percentile:0.7 (default: all present)")
        ->delimiter(',');
    sweep->add_option("--out", sweep_out, "Output .csv or .json (default: CSV to stdout)");
    sweep->callback([&] { exit_code = run_sweep(sweep_records, sweep_policies, sweep_out); });

    // summarize
    fs::path sum_records;
    std::string sum_policy = "fixed:0.4";
    std::string sum_by = "content";
    std::optional<fs::path> sum_out;
    auto* summarize = app.add_subcommand("summarize", "Per-component delta summaries at one policy");
    summarize->add_option("--records", sum_records, "records.csv or records.jsonl")->required();
    summarize->add_option("--policy", sum_policy, "Threshold policy");
    summarize->add_option("--by", sum_by, "content | style");
    summarize->add_option("--out", sum_out, "Output .csv or .json (default: CSV to stdout)");
    summarize->callback([&] { exit_code = run_summarize(sum_records, sum_policy, sum_by, sum_out); });

    // overlay
    OverlayArgs ov;
    auto* overlay = app.add_subcommand("overlay", "Render a heatmap overlay PNG");
    overlay->add_option("--manifest", ov.manifest, "Pair manifest; the map is computed from its dump");
    overlay->add_option("--map", ov.map, "Precomputed .dmap file");
    overlay->add_option("--component", ov.component, "content | style | token:N");
    overlay->add_option("--image", ov.image, "Base image PNG (default: manifest image or gray)");
    overlay->add_option("--opacity", ov.opacity, "Heat opacity at value 1")->check(CLI::Range(0.0, 1.0));
    overlay->add_option("--out", ov.out, "Output PNG")->required();
    overlay->callback([&] { exit_code = run_overlay(ov); });

    // synth
    fs::path synth_out;
    SyntheticCorpusOptions synth_opts;
    std::vector<std::string> synth_scenes;
    auto* synth = app.add_subcommand("synth", "Write synthetic (manifest, dump) pairs with known answers");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--count", synth_opts.count, "Number of pairs");
    synth->add_option("--seed", synth_opts.seed, "RNG seed");
    synth->add_option("--noise", synth_opts.noise, "Uniform noise amplitude")->check(CLI::NonNegativeNumber);
    synth->add_option("--latent", synth_opts.latent_size, "Latent grid side");
    synth->add_option("--scale", synth_opts.scale, "Image side / latent side");
    synth->add_option("--scenes", synth_scenes, "disjoint,half-overlap,entangled")->delimiter(',');
    synth->callback([&] { exit_code = run_synth(synth_out, synth_opts, synth_scenes); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return exit_code;
}
