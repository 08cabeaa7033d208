#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "daamsep/daam.hpp"
#include "daamsep/png_io.hpp"

namespace daamsep {

struct OverlayOptions {
    double opacity = 0.6;          // heat alpha at map value 1.0
    std::uint8_t background = 128; // neutral gray used when no image is given
};

// Viridis ramp, 256 entries; v is clamped to [0, 1].
std::array<std::uint8_t, 3> colormap(double v);

// Per-pixel alpha is opacity * map value, so a zero map leaves the base untouched.
RgbImage render_overlay(const std::optional<RgbImage>& image, const AttributionMap& map,
                        const OverlayOptions& options = {});

void render_overlay_file(const std::optional<std::filesystem::path>& image_path, const AttributionMap& map,
                         const std::filesystem::path& out, const OverlayOptions& options = {});

} // namespace daamsep
