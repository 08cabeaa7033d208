#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace daamsep {

struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb; // 3 bytes per pixel, row-major

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), rgb(w * h * 3, fill) {}

    [[nodiscard]] const std::uint8_t* pixel(std::size_t x, std::size_t y) const { return &rgb[(y * width + x) * 3]; }
    std::uint8_t* pixel(std::size_t x, std::size_t y) { return &rgb[(y * width + x) * 3]; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Any PNG color type is converted to 8-bit RGB; alpha is dropped.
RgbImage read_png(const std::filesystem::path& path);

// Encoders use fixed compression settings so identical pixels give identical bytes.
std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image);
std::vector<std::uint8_t> encode_png_gray(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& gray);

void write_png(const RgbImage& image, const std::filesystem::path& path);
void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path);

} // namespace daamsep
