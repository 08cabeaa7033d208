#include "daamsep/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace daamsep {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw std::runtime_error(std::string("libpng: ") + msg); }

void png_warn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void no_flush(png_structp) {}

std::vector<std::uint8_t> encode(std::size_t width, std::size_t height, int color_type, int channels,
                                 const std::uint8_t* pixels) {
    if (width == 0 || height == 0) {
        throw std::invalid_argument("cannot encode an empty image");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (png == nullptr) {
        throw std::runtime_error("png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    try {
        png_set_write_fn(png, &out, append_bytes, no_flush);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 6);
        png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
        png_write_info(png, info);
        const std::size_t stride = width * static_cast<std::size_t>(channels);
        for (std::size_t y = 0; y < height; ++y) {
            png_write_row(png, const_cast<png_bytep>(pixels + y * stride));
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

} // namespace

RgbImage read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw std::runtime_error("cannot open " + path.string());
    }
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw std::runtime_error(path.string() + " is not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (png == nullptr) {
        throw std::runtime_error("png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    RgbImage image;
    try {
        png_init_io(png, file.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        const auto depth = png_get_bit_depth(png, info);
        if (depth == 16) {
            png_set_strip_16(png);
        }
        if (color == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
        }
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
            png_set_gray_to_rgb(png);
        }
        if ((color & PNG_COLOR_MASK_ALPHA) != 0) {
            png_set_strip_alpha(png);
        }
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
            png_set_strip_alpha(png);
        }
        png_read_update_info(png, info);
        image = RgbImage(png_get_image_width(png, info), png_get_image_height(png, info));
        if (png_get_rowbytes(png, info) != image.width * 3) {
            throw std::runtime_error("unexpected PNG row layout in " + path.string());
        }
        std::vector<png_bytep> rows(image.height);
        for (std::size_t y = 0; y < image.height; ++y) {
            rows[y] = image.rgb.data() + y * image.width * 3;
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image) {
    return encode(image.width, image.height, PNG_COLOR_TYPE_RGB, 3, image.rgb.data());
}

std::vector<std::uint8_t> encode_png_gray(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& gray) {
    if (gray.size() != width * height) {
        throw std::invalid_argument("grayscale buffer size does not match dimensions");
    }
    return encode(width, height, PNG_COLOR_TYPE_GRAY, 1, gray.data());
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed to write " + path.string());
    }
}

void write_png(const RgbImage& image, const std::filesystem::path& path) { write_bytes(encode_png_rgb(image), path); }

} // namespace daamsep
