#include <doctest.h>

#include <cstdint>

#include "daamsep/overlay.hpp"
#include "daamsep/png_io.hpp"
#include "test_util.hpp"

using namespace daamsep;

namespace {

RgbImage gradient_image(std::size_t w, std::size_t h) {
    RgbImage img(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            auto* p = img.pixel(x, y);
            p[0] = static_cast<std::uint8_t>(x * 255 / (w - 1));
            p[1] = static_cast<std::uint8_t>(y * 255 / (h - 1));
            p[2] = 200;
        }
    }
    return img;
}

AttributionMap ramp_map(std::size_t w, std::size_t h) {
    AttributionMap m;
    m.grid = GridD(w, h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            m.grid(x, y) = static_cast<double>(x + y) / static_cast<double>(w + h - 2);
        }
    }
    return m;
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : bytes) {
        h = (h ^ b) * 0x100000001b3ull;
    }
    return h;
}

} // namespace

TEST_CASE("zero map leaves the image untouched") {
    const auto img = gradient_image(16, 8);
    AttributionMap zero;
    zero.grid = GridD(16, 8, 0.0);
    CHECK(render_overlay(img, zero) == img);
}

TEST_CASE("single hot pixel at full opacity") {
    AttributionMap m;
    m.grid = GridD(5, 4, 0.0);
    m.grid(3, 1) = 1.0;
    OverlayOptions opts;
    opts.opacity = 1.0;
    const auto out = render_overlay(std::nullopt, m, opts);
    const auto hot = colormap(1.0);
    std::size_t changed = 0;
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 5; ++x) {
            const auto* p = out.pixel(x, y);
            if (p[0] != 128 || p[1] != 128 || p[2] != 128) {
                ++changed;
                CHECK(p[0] == hot[0]);
                CHECK(p[1] == hot[1]);
                CHECK(p[2] == hot[2]);
            }
        }
    }
    CHECK(changed == 1);
}

TEST_CASE("colormap endpoints") {
    // viridis runs from dark purple to yellow
    const auto lo = colormap(0.0);
    const auto hi = colormap(1.0);
    CHECK(lo[2] > lo[1]);
    CHECK(hi[0] > 200);
    CHECK(hi[1] > 200);
    CHECK(colormap(-3.0) == lo);
    CHECK(colormap(7.0) == hi);
}

TEST_CASE("overlay argument checks") {
    const auto img = gradient_image(8, 8);
    CHECK_THROWS_AS(render_overlay(img, ramp_map(4, 4)), std::invalid_argument);
    OverlayOptions bad;
    bad.opacity = 1.5;
    CHECK_THROWS_AS(render_overlay(std::nullopt, ramp_map(4, 4), bad), std::invalid_argument);
}

TEST_CASE("overlay pixels match the recorded hash") {
    const auto out = render_overlay(gradient_image(32, 24), ramp_map(32, 24));
    CHECK(fnv1a(out.rgb) == 0x4a87f4c13c2336e7ull);
}

TEST_CASE("PNG encoding is deterministic and lossless") {
    testutil::TempDir tmp("png");
    const auto out = render_overlay(gradient_image(32, 24), ramp_map(32, 24));
    CHECK(encode_png_rgb(out) == encode_png_rgb(out));
    render_overlay_file(std::nullopt, ramp_map(32, 24), tmp / "a.png");
    write_png(out, tmp / "b.png");
    CHECK(read_png(tmp / "b.png") == out);
    CHECK(read_png(tmp / "a.png").width == 32);
    CHECK_THROWS(read_png(tmp / "missing.png"));
}

TEST_CASE("overlay onto a PNG from disk") {
    testutil::TempDir tmp("png_in");
    const auto img = gradient_image(32, 24);
    write_png(img, tmp / "img.png");
    render_overlay_file(tmp / "img.png", ramp_map(32, 24), tmp / "ov.png");
    CHECK(read_png(tmp / "ov.png") == render_overlay(img, ramp_map(32, 24)));
}
