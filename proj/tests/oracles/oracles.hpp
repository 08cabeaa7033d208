#pragma once

// Brute-force reference implementations used only by tests. None of these
// call into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

// Keys' cubic convolution kernel written directly from its piecewise form.
inline double keys_kernel(double s, double a) {
    const double x = std::fabs(s);
    if (x < 1.0) {
        return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    }
    if (x < 2.0) {
        return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    }
    return 0.0;
}

// Evaluates every output sample as a full 2D sum over all integer source
// positions within reach of the kernel, edge-replicating out-of-range ones.
inline std::vector<double> cubic_upsample(const std::vector<double>& src, std::size_t w, std::size_t h,
                                          std::size_t out_w, std::size_t out_h, double a, bool clamp) {
    std::vector<double> out(out_w * out_h, 0.0);
    auto clampi = [](long i, long n) { return std::min(std::max(i, 0L), n - 1); };
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double sy = (oy + 0.5) * static_cast<double>(h) / static_cast<double>(out_h) - 0.5;
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double sx = (ox + 0.5) * static_cast<double>(w) / static_cast<double>(out_w) - 0.5;
            double acc = 0.0;
            for (long j = static_cast<long>(std::floor(sy)) - 3; j <= static_cast<long>(std::floor(sy)) + 3; ++j) {
                const double wy = keys_kernel(sy - static_cast<double>(j), a);
                if (wy == 0.0) {
                    continue;
                }
                for (long i = static_cast<long>(std::floor(sx)) - 3; i <= static_cast<long>(std::floor(sx)) + 3; ++i) {
                    const double wx = keys_kernel(sx - static_cast<double>(i), a);
                    acc += wx * wy * src[clampi(j, static_cast<long>(h)) * w + clampi(i, static_cast<long>(w))];
                }
            }
            out[oy * out_w + ox] = clamp ? std::max(acc, 0.0) : acc;
        }
    }
    return out;
}

using Bits = std::vector<bool>;

inline std::optional<double> iou(const Bits& a, const Bits& b) {
    long inter = 0;
    long uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && b[i]) {
            ++inter;
        }
        if (a[i] || b[i]) {
            ++uni;
        }
    }
    if (uni == 0) {
        return std::nullopt;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Baseline {
    std::optional<double> mean;
    std::size_t n_pairs = 0;
};

// Literal pair enumeration: the units are C, S and every ordinary token;
// all unordered unit pairs are listed and those with exactly one member in
// {C, S} are kept.
inline Baseline baseline(const Bits& content, const Bits& style, const std::vector<Bits>& tokens,
                         const std::vector<int>& role /* 0 ordinary, 1 content, 2 style, 3 special */) {
    std::vector<const Bits*> units{&content, &style};
    std::vector<bool> is_component{true, true};
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (role[k] == 0) {
            units.push_back(&tokens[k]);
            is_component.push_back(false);
        }
    }
    Baseline b;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t j = i + 1; j < units.size(); ++j) {
            if (is_component[i] == is_component[j]) {
                continue;
            }
            ++b.n_pairs;
            if (auto v = iou(*units[i], *units[j])) {
                sum += *v;
                ++defined;
            }
        }
    }
    if (defined > 0) {
        b.mean = sum / static_cast<double>(defined);
    }
    return b;
}

// Sort-and-index linear percentile: value at rank p*(n-1).
inline double linear_percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double r = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(r);
    if (lo + 1 >= v.size()) {
        return v.back();
    }
    return v[lo] + (r - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

// Student t CDF for df = 4 in closed form.
inline long double t_cdf_df4(long double t) {
    const long double u = 1.0L + t * t / 4.0L;
    return 0.5L + 0.375L * t / std::sqrt(u) * (1.0L - t * t / (12.0L * u));
}

// Two-pass mean and sample variance.
inline std::pair<double, double> mean_var(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return {m, ss / static_cast<double>(v.size() - 1)};
}

} // namespace oracle
