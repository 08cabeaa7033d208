#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace daamsep {

// Dense row-major 2D array: element (x, y) lives at y * width + x.
template <typename T>
struct Grid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(std::size_t w, std::size_t h, T fill = T{}) : width(w), height(h), values(w * h, fill) {}
    Grid(std::size_t w, std::size_t h, std::vector<T> v) : width(w), height(h), values(std::move(v)) {
        if (values.size() != w * h) {
            throw std::invalid_argument("Grid: value count does not match width*height");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool empty() const noexcept { return values.empty(); }

    T& operator()(std::size_t x, std::size_t y) { return values[y * width + x]; }
    const T& operator()(std::size_t x, std::size_t y) const { return values[y * width + x]; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using GridF = Grid<float>;
using GridD = Grid<double>;

} // namespace daamsep
