#pragma once

// Per-token attribution maps from recorded cross-attention.
//
// Every record slice for a token is upsampled to image resolution with
// cubic convolution, clamped at zero, and summed over all records in double
// precision. The sum is max-normalized to [0, 1].

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "daamsep/dump_format.hpp"
#include "daamsep/grid.hpp"
#include "daamsep/manifest.hpp"

namespace daamsep {

enum class PixelAlignment { HalfPixelCenters };

struct UpsampleSpec {
    double a = -0.75; // cubic convolution coefficient, must be negative
    PixelAlignment alignment = PixelAlignment::HalfPixelCenters;
    bool clamp_negative = true;

    void validate() const;
};

// Cubic convolution kernel W(x) for coefficient a.
double cubic_kernel(double x, double a) noexcept;

// Four source taps per output sample along one axis, edge-replicated.
struct AxisTaps {
    std::vector<std::array<std::size_t, 4>> index;
    std::vector<std::array<double, 4>> weight;

    static AxisTaps build(std::size_t src_len, std::size_t dst_len, const UpsampleSpec& spec);
};

GridD bicubic_upsample(const GridD& grid, std::size_t target_w, std::size_t target_h, const UpsampleSpec& spec);

struct AttributionMap {
    TokenSpan span;
    GridD grid;
    bool degenerate = false; // raw input was all zero

    [[nodiscard]] std::size_t width() const noexcept { return grid.width; }
    [[nodiscard]] std::size_t height() const noexcept { return grid.height; }
};

// Slice of one record for one token at latent resolution.
GridD record_slice(const AttentionRecord& record, std::size_t token, std::size_t n_tokens);

GridD aggregate_token_map(const AttentionDump& dump, std::size_t token_index, const UpsampleSpec& spec);

// Raw maps for every token in one pass over the records.
std::vector<GridD> aggregate_all_tokens(const AttentionDump& dump, const UpsampleSpec& spec);

AttributionMap normalize_map(const GridD& raw, TokenSpan span = {});

// Sums raw per-token aggregates across the span, then normalizes once.
AttributionMap fuse_raw(std::span<const GridD> raw_per_token, TokenSpan span);

AttributionMap fuse_span(const AttentionDump& dump, TokenSpan span, const UpsampleSpec& spec,
                         const std::vector<bool>& special_flags = {});

// "DMAP" export: magic, u32 width, u32 height, width*height little-endian f32.
void write_dmap(const AttributionMap& map, const std::filesystem::path& path);
AttributionMap read_dmap(const std::filesystem::path& path);

// 8-bit grayscale PNG, value 1.0 -> 255.
void write_map_png(const AttributionMap& map, const std::filesystem::path& path);

} // namespace daamsep
