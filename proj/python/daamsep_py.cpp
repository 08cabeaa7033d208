// Python bindings for the main daamsep operations. Structured results are
// returned as plain dicts/lists (via the library's JSON forms) and grids as
// NumPy arrays.

#include <algorithm>
#include <cstring>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "daamsep/corpus.hpp"
#include "daamsep/daam.hpp"
#include "daamsep/dump_format.hpp"
#include "daamsep/manifest.hpp"
#include "daamsep/masks.hpp"
#include "daamsep/overlay.hpp"
#include "daamsep/pipeline.hpp"
#include "daamsep/records_io.hpp"
#include "daamsep/stats.hpp"
#include "daamsep/synth.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace daamsep;

namespace {

py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<double> grid_to_array(const GridD& g) {
    py::array_t<double> out({g.height, g.width});
    std::memcpy(out.mutable_data(), g.values.data(), g.values.size() * sizeof(double));
    return out;
}

AttributionMap map_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) {
        throw std::invalid_argument("map must be a 2-D array");
    }
    AttributionMap m;
    m.grid = GridD(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
    std::memcpy(m.grid.values.data(), a.data(), m.grid.values.size() * sizeof(double));
    m.degenerate = std::all_of(m.grid.values.begin(), m.grid.values.end(), [](double v) { return v == 0.0; });
    return m;
}

BinaryMask mask_from_array(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) {
        throw std::invalid_argument("mask must be a 2-D array");
    }
    std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
    return make_mask(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)), std::move(bits));
}

PairedSample sample_from(const std::vector<double>& iou_cs, const std::vector<double>& miou_b) {
    if (iou_cs.size() != miou_b.size()) {
        throw std::invalid_argument("iou_cs and miou_b must have the same length");
    }
    PairedSample s;
    for (std::size_t i = 0; i < iou_cs.size(); ++i) {
        s.pairs.emplace_back(iou_cs[i], miou_b[i]);
    }
    return s;
}

} // namespace

PYBIND11_MODULE(_daamsep, m) {
    m.doc() = "Content/style separation metrics over diffusion cross-attention dumps";

    py::register_exception<DumpError>(m, "DumpError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<AttentionRecord>(m, "AttentionRecord")
        .def_readonly("layer_id", &AttentionRecord::layer_id)
        .def_readonly("timestep", &AttentionRecord::timestep)
        .def_readonly("head", &AttentionRecord::head)
        .def_readonly("height", &AttentionRecord::height)
        .def_readonly("width", &AttentionRecord::width);

    py::class_<AttentionDump>(m, "AttentionDump")
        .def_readonly("image_width", &AttentionDump::image_width)
        .def_readonly("image_height", &AttentionDump::image_height)
        .def_readonly("n_tokens", &AttentionDump::n_tokens)
        .def_readonly("seed", &AttentionDump::seed)
        .def_readonly("model_id", &AttentionDump::model_id)
        .def_readonly("records", &AttentionDump::records)
        .def(
            "values",
            [](const AttentionDump& d, std::size_t i) {
                const auto& r = d.records.at(i);
                py::array_t<float> out({static_cast<std::size_t>(r.height), static_cast<std::size_t>(r.width),
                                        static_cast<std::size_t>(d.n_tokens)});
                std::memcpy(out.mutable_data(), r.values.data(), r.values.size() * sizeof(float));
                return out;
            },
            py::arg("record"), "Record payload as a (height, width, n_tokens) float32 array.");

    m.def("read_dump", [](const fs::path& p) { return read_dump_file(p); }, py::arg("path"));

    m.def(
        "validate_pair",
        [](const fs::path& manifest_path) {
            const auto manifest = load_manifest(manifest_path);
            const auto dump = read_dump_file(manifest_path.parent_path() / manifest.dump_path);
            py::list issues;
            for (const auto& i : validate_pair(dump, manifest).issues) {
                issues.append(py::make_tuple(to_string(i.kind), i.message));
            }
            return issues;
        },
        py::arg("manifest"), "List of (kind, message) issues; empty when the pair is consistent.");

    m.def(
        "attribution_map",
        [](const AttentionDump& dump, std::size_t first, std::size_t last, const std::vector<bool>& special) {
            return grid_to_array(fuse_span(dump, TokenSpan{first, last}, UpsampleSpec{}, special).grid);
        },
        py::arg("dump"), py::arg("first"), py::arg("last"), py::arg("special") = std::vector<bool>{},
        "Normalized attribution map for the inclusive token span [first, last].");

    m.def(
        "upsample",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, std::size_t width,
           std::size_t height) { return grid_to_array(bicubic_upsample(map_from_array(a).grid, width, height, {})); },
        py::arg("grid"), py::arg("width"), py::arg("height"));

    m.def(
        "threshold_mask",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, const std::string& policy) {
            const auto map = map_from_array(a);
            const auto mask = threshold_mask(map, parse_policy(policy));
            py::array_t<bool> out({map.height(), map.width()});
            std::copy(mask.bits.begin(), mask.bits.end(), out.mutable_data());
            return out;
        },
        py::arg("map"), py::arg("policy"), "Mask of a normalized map under e.g. \"fixed:0.4\".");

    m.def(
        "iou",
        [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<bool, py::array::c_style | py::array::forcecast>& b) {
            return iou(mask_from_array(a), mask_from_array(b));
        },
        py::arg("a"), py::arg("b"), "IoU of two masks; None when both are empty.");

    m.def(
        "analyze_pair",
        [](const fs::path& manifest_path, const std::vector<std::string>& policies) {
            RunConfig c;
            c.fixed_thresholds.clear();
            c.percentile_thresholds.clear();
            for (const auto& s : policies) {
                const auto p = parse_policy(s);
                (p.kind == PolicyKind::Fixed ? c.fixed_thresholds : c.percentile_thresholds).push_back(p.value);
            }
            const auto result = analyze_pair(PairRef{manifest_path.parent_path().filename().string(), manifest_path}, c);
            py::list out;
            for (const auto& r : result.records) {
                out.append(to_py(nlohmann::json(r)));
            }
            return out;
        },
        py::arg("manifest"), py::arg("policies") = std::vector<std::string>{"fixed:0.4"},
        "Separation records (dicts) for one pair, fixed policies first.");

    m.def(
        "paired_t_test",
        [](const std::vector<double>& iou_cs, const std::vector<double>& miou_b, bool greater) {
            const auto r = paired_t_test(sample_from(iou_cs, miou_b),
                                         greater ? Alternative::Greater : Alternative::TwoSided);
            py::dict d;
            d["t"] = r.t;
            d["p"] = r.p;
            d["df"] = r.df;
            return d;
        },
        py::arg("iou_cs"), py::arg("miou_b"), py::arg("greater") = false);

    m.def(
        "effect_size",
        [](const std::vector<double>& iou_cs, const std::vector<double>& miou_b) {
            return effect_size(sample_from(iou_cs, miou_b));
        },
        py::arg("iou_cs"), py::arg("miou_b"));

    m.def(
        "render_prompt",
        [](int template_id, const std::string& content, const std::string& style) {
            return to_py(nlohmann::json(render_prompt(template_id, content, style)));
        },
        py::arg("template_id"), py::arg("content"), py::arg("style"));

    m.def(
        "generate_corpus",
        [](const std::vector<int>& templates) {
            py::list out;
            for (const auto& p : generate_corpus(bundled_contents(), bundled_styles(), templates)) {
                out.append(to_py(nlohmann::json(p)));
            }
            return out;
        },
        py::arg("templates") = std::vector<int>{1, 2, 3, 4}, "Corpus over the bundled label lists.");

    m.def(
        "write_synthetic_corpus",
        [](const fs::path& out, std::size_t count, std::uint64_t seed, double noise) {
            SyntheticCorpusOptions o;
            o.count = count;
            o.seed = seed;
            o.noise = noise;
            return write_synthetic_corpus(out, o);
        },
        py::arg("out"), py::arg("count") = 20, py::arg("seed") = 0, py::arg("noise") = 0.0);

    m.def(
        "run_pipeline",
        [](const py::dict& config) {
            const RunConfig c = run_config_from_json(from_py(config));
            RunReport report;
            {
                py::gil_scoped_release release;
                report = run_pipeline(c);
            }
            return to_py(report_to_json(report, c));
        },
        py::arg("config"), "Runs the full analysis; config keys mirror the JSON config file.");

    m.def(
        "render_overlay",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& map, const fs::path& out,
           double opacity) {
            OverlayOptions o;
            o.opacity = opacity;
            render_overlay_file(std::nullopt, map_from_array(map), out, o);
        },
        py::arg("map"), py::arg("out"), py::arg("opacity") = 0.6);
}
