#pragma once

// Synthetic (dump, manifest) pairs with analytically known separation
// records, for GPU-free testing of the whole pipeline.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "daamsep/dump_format.hpp"
#include "daamsep/manifest.hpp"
#include "daamsep/masks.hpp"

namespace daamsep {

enum class RegionShape { Rect, Uniform, Blob };

// Coordinates are latent cells; the image is latent size times scale.
struct Region {
    RegionShape shape = RegionShape::Rect;
    std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open rectangle
    double cx = 0.0, cy = 0.0, sigma = 1.0;     // blob centre and width
    double intensity = 1.0;

    static Region rect(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, double intensity = 1.0);
    static Region uniform(double intensity);
    static Region blob(double cx, double cy, double sigma, double intensity = 1.0);
};

struct SyntheticToken {
    std::string text;
    bool special = false;
    std::vector<Region> regions;
};

struct SyntheticSceneSpec {
    std::uint32_t latent_w = 16;
    std::uint32_t latent_h = 16;
    std::uint32_t scale = 1;
    std::uint32_t n_layers = 2;
    std::uint32_t n_timesteps = 3;
    std::uint32_t n_heads = 2;
    double noise = 0.0; // uniform amplitude added to every stored value
    std::uint64_t seed = 0;

    std::vector<SyntheticToken> tokens;
    TokenSpan content_span;
    TokenSpan style_span;
    std::string prompt;
    std::string content_label;
    std::string style_label;
    StyleKind style_kind = StyleKind::Movement;
    int template_id = 1;

    // Policy at which the expected record is computed.
    ThresholdPolicy policy = ThresholdPolicy::fixed(0.4);

    void validate() const;
};

struct SyntheticFixture {
    AttentionDump dump;
    Manifest manifest;
    SeparationRecord expected; // exact for noise == 0 and scale == 1
};

SyntheticFixture synth_fixture(const SyntheticSceneSpec& spec);

enum class SceneKind {
    Disjoint,    // content left half, style right half, others uniform
    Entangled,   // every token on the same rectangle
    HalfOverlap, // equal C/S rectangles overlapping on half their area
};

const char* to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& s);

// A scene for a rendered prompt: words become tokens, wrapped in begin/end
// special tokens; multi-word labels become multi-token spans.
SyntheticSceneSpec preset_scene(SceneKind kind, int template_id, const std::string& content_label,
                                const std::string& style_label, StyleKind style_kind, std::uint32_t latent_size = 16);

// Writes manifest.json, dump.bin and expected.json into dir.
void write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir);

struct SyntheticCorpusOptions {
    std::size_t count = 20;
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::uint32_t latent_size = 16;
    std::uint32_t scale = 1;
    std::vector<SceneKind> scenes = {SceneKind::Disjoint, SceneKind::HalfOverlap, SceneKind::Entangled};
};

// pair_000, pair_001, ... plus index.jsonl. Labels cycle through the bundled lists.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& out_dir,
                                                          const SyntheticCorpusOptions& options);

} // namespace daamsep
