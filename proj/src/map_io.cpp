#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "daamsep/daam.hpp"
#include "daamsep/png_io.hpp"

namespace daamsep {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

} // namespace

void write_dmap(const AttributionMap& map, const std::filesystem::path& path) {
    std::vector<char> out{'D', 'M', 'A', 'P'};
    put_u32(out, static_cast<std::uint32_t>(map.width()));
    put_u32(out, static_cast<std::uint32_t>(map.height()));
    for (double v : map.grid.values) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw std::runtime_error("failed to write " + path.string());
    }
}

AttributionMap read_dmap(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<char> in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < 12 || std::memcmp(in.data(), "DMAP", 4) != 0) {
        throw std::runtime_error(path.string() + ": bad DMAP magic");
    }
    const std::size_t w = get_u32(in, 4);
    const std::size_t h = get_u32(in, 8);
    if (in.size() != 12 + w * h * 4) {
        throw std::runtime_error(path.string() + ": DMAP size does not match header");
    }
    AttributionMap map;
    map.grid = GridD(w, h, 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < w * h; ++i) {
        map.grid.values[i] = std::bit_cast<float>(get_u32(in, 12 + i * 4));
        peak = std::max(peak, map.grid.values[i]);
    }
    map.degenerate = peak == 0.0;
    return map;
}

void write_map_png(const AttributionMap& map, const std::filesystem::path& path) {
    std::vector<std::uint8_t> gray(map.grid.values.size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double v = std::clamp(map.grid.values[i], 0.0, 1.0);
        gray[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    write_bytes(encode_png_gray(map.width(), map.height(), gray), path);
}

} // namespace daamsep
