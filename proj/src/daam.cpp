#include "daamsep/daam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace daamsep {

void UpsampleSpec::validate() const {
    if (!(a < 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("cubic convolution coefficient a must be negative");
    }
}

double cubic_kernel(double x, double a) noexcept {
    x = std::abs(x);
    if (x <= 1.0) {
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    }
    if (x < 2.0) {
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    }
    return 0.0;
}

AxisTaps AxisTaps::build(std::size_t src_len, std::size_t dst_len, const UpsampleSpec& spec) {
    AxisTaps taps;
    taps.index.resize(dst_len);
    taps.weight.resize(dst_len);
    const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
    const auto last = static_cast<std::ptrdiff_t>(src_len) - 1;
    for (std::size_t o = 0; o < dst_len; ++o) {
        const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        const auto i0 = static_cast<std::ptrdiff_t>(base);
        // Distances to taps at i0-1, i0, i0+1, i0+2 are 1+t, t, 1-t, 2-t.
        taps.weight[o] = {cubic_kernel(1.0 + t, spec.a), cubic_kernel(t, spec.a), cubic_kernel(1.0 - t, spec.a),
                          cubic_kernel(2.0 - t, spec.a)};
        for (std::ptrdiff_t k = 0; k < 4; ++k) {
            taps.index[o][k] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0 - 1 + k, 0, last));
        }
    }
    return taps;
}

namespace {

void check_target(std::size_t src_w, std::size_t src_h, std::size_t dst_w, std::size_t dst_h) {
    if (src_w == 0 || src_h == 0) {
        throw std::invalid_argument("bicubic_upsample: source grid is empty");
    }
    if (dst_w < src_w || dst_h < src_h) {
        throw std::invalid_argument("bicubic_upsample: target " + std::to_string(dst_w) + "x" +
                                    std::to_string(dst_h) + " is smaller than source " + std::to_string(src_w) +
                                    "x" + std::to_string(src_h) + "; downsampling is not supported");
    }
}

// Upsamples an interleaved (h, w, channels) array and adds the clamped
// result into acc, laid out (dst_h, dst_w, channels).
class Upsampler {
public:
    Upsampler(std::size_t dst_w, std::size_t dst_h, const UpsampleSpec& spec) : dst_w_(dst_w), dst_h_(dst_h), spec_(spec) {}

    template <typename T>
    void accumulate(const T* src, std::size_t src_w, std::size_t src_h, std::size_t channels, std::vector<double>& acc) {
        check_target(src_w, src_h, dst_w_, dst_h_);
        const auto& [tx, ty] = taps_for(src_w, src_h);

        // Horizontal pass: (src_h, dst_w, channels).
        row_.assign(src_h * dst_w_ * channels, 0.0);
        for (std::size_t y = 0; y < src_h; ++y) {
            const T* srow = src + y * src_w * channels;
            double* drow = row_.data() + y * dst_w_ * channels;
            for (std::size_t x = 0; x < dst_w_; ++x) {
                const auto& idx = tx.index[x];
                const auto& w = tx.weight[x];
                double* d = drow + x * channels;
                for (int k = 0; k < 4; ++k) {
                    const T* s = srow + idx[k] * channels;
                    const double wk = w[k];
                    for (std::size_t c = 0; c < channels; ++c) {
                        d[c] += wk * static_cast<double>(s[c]);
                    }
                }
            }
        }

        // Vertical pass, clamp, accumulate.
        const std::size_t stride = dst_w_ * channels;
        col_.assign(stride, 0.0);
        for (std::size_t y = 0; y < dst_h_; ++y) {
            const auto& idx = ty.index[y];
            const auto& w = ty.weight[y];
            std::fill(col_.begin(), col_.end(), 0.0);
            for (int k = 0; k < 4; ++k) {
                const double* s = row_.data() + idx[k] * stride;
                const double wk = w[k];
                for (std::size_t i = 0; i < stride; ++i) {
                    col_[i] += wk * s[i];
                }
            }
            double* out = acc.data() + y * stride;
            if (spec_.clamp_negative) {
                for (std::size_t i = 0; i < stride; ++i) {
                    out[i] += std::max(col_[i], 0.0);
                }
            } else {
                for (std::size_t i = 0; i < stride; ++i) {
                    out[i] += col_[i];
                }
            }
        }
    }

private:
    const std::pair<AxisTaps, AxisTaps>& taps_for(std::size_t src_w, std::size_t src_h) {
        auto key = std::make_pair(src_w, src_h);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            it = cache_.emplace(key, std::make_pair(AxisTaps::build(src_w, dst_w_, spec_),
                                                    AxisTaps::build(src_h, dst_h_, spec_)))
                     .first;
        }
        return it->second;
    }

    std::size_t dst_w_;
    std::size_t dst_h_;
    UpsampleSpec spec_;
    std::map<std::pair<std::size_t, std::size_t>, std::pair<AxisTaps, AxisTaps>> cache_;
    std::vector<double> row_;
    std::vector<double> col_;
};

void check_dump_shape(const AttentionDump& dump) {
    if (dump.records.empty()) {
        throw std::invalid_argument("attention dump has no records");
    }
    if (dump.n_tokens == 0) {
        throw std::invalid_argument("attention dump has zero tokens");
    }
}

} // namespace

GridD bicubic_upsample(const GridD& grid, std::size_t target_w, std::size_t target_h, const UpsampleSpec& spec) {
    spec.validate();
    check_target(grid.width, grid.height, target_w, target_h);
    GridD out(target_w, target_h, 0.0);
    Upsampler up(target_w, target_h, spec);
    up.accumulate(grid.values.data(), grid.width, grid.height, 1, out.values);
    return out;
}

GridD record_slice(const AttentionRecord& record, std::size_t token, std::size_t n_tokens) {
    GridD g(record.width, record.height);
    for (std::size_t y = 0; y < record.height; ++y) {
        for (std::size_t x = 0; x < record.width; ++x) {
            g(x, y) = record.at(y, x, token, n_tokens);
        }
    }
    return g;
}

GridD aggregate_token_map(const AttentionDump& dump, std::size_t token_index, const UpsampleSpec& spec) {
    spec.validate();
    check_dump_shape(dump);
    if (token_index >= dump.n_tokens) {
        throw std::out_of_range("token index " + std::to_string(token_index) + " out of range for " +
                                std::to_string(dump.n_tokens) + " tokens");
    }
    GridD acc(dump.image_width, dump.image_height, 0.0);
    Upsampler up(dump.image_width, dump.image_height, spec);
    for (const auto& r : dump.records) {
        const GridD slice = record_slice(r, token_index, dump.n_tokens);
        up.accumulate(slice.values.data(), slice.width, slice.height, 1, acc.values);
    }
    return acc;
}

std::vector<GridD> aggregate_all_tokens(const AttentionDump& dump, const UpsampleSpec& spec) {
    spec.validate();
    check_dump_shape(dump);
    const std::size_t n = dump.n_tokens;
    const std::size_t w = dump.image_width;
    const std::size_t h = dump.image_height;
    std::vector<double> acc(w * h * n, 0.0);
    Upsampler up(w, h, spec);
    for (const auto& r : dump.records) {
        up.accumulate(r.values.data(), r.width, r.height, n, acc);
    }
    std::vector<GridD> maps(n, GridD(w, h, 0.0));
    for (std::size_t p = 0; p < w * h; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            maps[k].values[p] = acc[p * n + k];
        }
    }
    return maps;
}

AttributionMap normalize_map(const GridD& raw, TokenSpan span) {
    double peak = 0.0;
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const double v = raw.values[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("normalize_map: value " + std::to_string(v) + " at flat index " +
                                        std::to_string(i) + " is negative or non-finite");
        }
        peak = std::max(peak, v);
    }
    AttributionMap map{span, GridD(raw.width, raw.height, 0.0), peak == 0.0};
    if (peak > 0.0) {
        for (std::size_t i = 0; i < raw.values.size(); ++i) {
            map.grid.values[i] = raw.values[i] / peak;
        }
    }
    return map;
}

AttributionMap fuse_raw(std::span<const GridD> raw_per_token, TokenSpan span) {
    if (span.first > span.last || span.last >= raw_per_token.size()) {
        throw std::out_of_range("fuse_raw: span out of range");
    }
    const GridD& first = raw_per_token[span.first];
    if (span.length() == 1) {
        return normalize_map(first, span);
    }
    GridD sum(first.width, first.height, 0.0);
    for (std::size_t k = span.first; k <= span.last; ++k) {
        const GridD& g = raw_per_token[k];
        if (g.width != sum.width || g.height != sum.height) {
            throw std::invalid_argument("fuse_raw: token maps differ in size");
        }
        for (std::size_t i = 0; i < sum.values.size(); ++i) {
            sum.values[i] += g.values[i];
        }
    }
    return normalize_map(sum, span);
}

AttributionMap fuse_span(const AttentionDump& dump, TokenSpan span, const UpsampleSpec& spec,
                         const std::vector<bool>& special_flags) {
    if (span.first > span.last || span.last >= dump.n_tokens) {
        throw std::out_of_range("fuse_span: span [" + std::to_string(span.first) + ", " + std::to_string(span.last) +
                                "] out of range");
    }
    for (std::size_t k = span.first; k <= span.last; ++k) {
        if (k < special_flags.size() && special_flags[k]) {
            throw std::invalid_argument("fuse_span: span includes special token " + std::to_string(k));
        }
    }
    std::vector<GridD> raw;
    raw.reserve(span.length());
    for (std::size_t k = span.first; k <= span.last; ++k) {
        raw.push_back(aggregate_token_map(dump, k, spec));
    }
    auto map = fuse_raw(raw, TokenSpan{0, raw.size() - 1});
    map.span = span;
    return map;
}

} // namespace daamsep
