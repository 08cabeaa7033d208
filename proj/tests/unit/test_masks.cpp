#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "daamsep/masks.hpp"
#include "oracles.hpp"

using namespace daamsep;

namespace {

AttributionMap map_of(std::size_t w, std::size_t h, std::vector<double> v) {
    AttributionMap m;
    m.grid = GridD(w, h, std::move(v));
    return m;
}

BinaryMask mask_of(std::size_t w, std::size_t h, std::initializer_list<std::size_t> on) {
    std::vector<std::uint8_t> bits(w * h, 0);
    for (auto i : on) {
        bits[i] = 1;
    }
    return make_mask(w, h, std::move(bits));
}

oracle::Bits to_bits(const BinaryMask& m) {
    return oracle::Bits(m.bits.begin(), m.bits.end());
}

AttributionMap random_map(std::mt19937_64& rng, std::size_t w, std::size_t h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(w * h);
    for (auto& x : v) {
        x = u(rng);
    }
    return map_of(w, h, std::move(v));
}

// Manifest whose token list is `roles` (0 ordinary, 1 content, 2 style, 3 special).
Manifest manifest_for_roles(const std::vector<int>& roles) {
    Manifest m;
    std::size_t c0 = roles.size(), c1 = 0, s0 = roles.size(), s1 = 0;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        m.tokens.push_back({"t" + std::to_string(i), roles[i] == 3, std::nullopt});
        if (roles[i] == 1) {
            c0 = std::min(c0, i);
            c1 = i;
        }
        if (roles[i] == 2) {
            s0 = std::min(s0, i);
            s1 = i;
        }
    }
    m.content_span = {c0, c1};
    m.style_span = {s0, s1};
    m.content_label = "giraffe";
    m.style_label = "Analytical Cubism";
    return m;
}

} // namespace

TEST_CASE("fixed threshold compares with >=") {
    const auto m = map_of(4, 1, {0.3, 0.5, 0.9, 1.0});
    const auto mask = threshold_mask(m, ThresholdPolicy::fixed(0.4));
    CHECK(mask.bits == std::vector<std::uint8_t>{0, 1, 1, 1});
    CHECK(mask.support == 3);
    CHECK(mask.threshold == 0.4);

    const auto exact = threshold_mask(map_of(2, 1, {0.4, 0.39999}), ThresholdPolicy::fixed(0.4));
    CHECK(exact.bits == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("tau = 0 keeps every pixel of a non-negative map") {
    const auto m = map_of(3, 1, {0.0, 0.2, 1.0});
    CHECK(threshold_mask(m, ThresholdPolicy::fixed(0.0)).support == 3);
}

TEST_CASE("percentile 0.7 on 100 distinct values") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::shuffle(v.begin(), v.end(), std::mt19937_64(4));
    for (auto& x : v) {
        x /= 100.0;
    }
    const auto m = map_of(10, 10, v);
    for (auto method : {PercentileMethod::Linear, PercentileMethod::LinearSupportCapped}) {
        const auto mask = threshold_mask(m, ThresholdPolicy::percentile(0.7), method);
        CHECK(mask.support == 30);
    }
    // Linear interpolation is the plain sort-and-index reading.
    CHECK(percentile_value(v, 0.7, PercentileMethod::Linear) == doctest::Approx(oracle::linear_percentile(v, 0.7)));
}

TEST_CASE("support cap restores the (1-p)n lower bound") {
    // Ten distinct values at p = 0.25: rank p(n-1) = 2.25 interpolates above
    // the third value, leaving 7 pixels, while (1-p)n = 7.5.
    std::vector<double> v{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const auto m = map_of(10, 1, v);
    const auto linear = threshold_mask(m, ThresholdPolicy::percentile(0.25), PercentileMethod::Linear);
    const auto capped = threshold_mask(m, ThresholdPolicy::percentile(0.25), PercentileMethod::LinearSupportCapped);
    CHECK(linear.support == 7);
    CHECK(capped.support == 8);
    CHECK(capped.threshold == 0.2);
}

TEST_CASE("percentile support bound holds on random maps") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_map(rng, 1 + rng() % 40, 1 + rng() % 40);
        const double n = static_cast<double>(m.grid.values.size());
        for (const auto& pol : percentile_grid()) {
            const auto mask = threshold_mask(m, pol);
            CHECK(static_cast<double>(mask.support) + 1e-9 >= (1.0 - pol.value) * n);
        }
    }
}

TEST_CASE("percentile on a degenerate map yields an empty mask with a warning") {
    auto m = map_of(2, 2, {0, 0, 0, 0});
    m.degenerate = true;
    const auto mask = threshold_mask(m, ThresholdPolicy::percentile(0.5));
    CHECK(mask.support == 0);
    CHECK(mask.degenerate_warning);
}

TEST_CASE("fixed-tau support is non-increasing in tau") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_map(rng, 16, 16);
        std::size_t prev = m.grid.values.size() + 1;
        for (int i = 0; i <= 20; ++i) {
            const auto s = threshold_mask(m, ThresholdPolicy::fixed(i / 20.0)).support;
            CHECK(s <= prev);
            prev = s;
        }
    }
}

TEST_CASE("policy parsing and labels") {
    CHECK(parse_policy("fixed:0.4") == ThresholdPolicy::fixed(0.4));
    CHECK(parse_policy("percentile:0.7").kind == PolicyKind::Percentile);
    CHECK(ThresholdPolicy::fixed(0.4).label() == "fixed:0.4");
    CHECK_THROWS(parse_policy("fixed"));
    CHECK_THROWS(parse_policy("fixed:abc"));
    CHECK_THROWS(parse_policy("percentile:1.0"));
    CHECK_THROWS(ThresholdPolicy::fixed(1.5));
    CHECK(fixed_grid().size() == 9);
    CHECK(percentile_grid().front().value == 0.1);
}

TEST_CASE("IoU examples") {
    const auto top_row = mask_of(3, 3, {0, 1, 2});
    const auto left_col = mask_of(3, 3, {0, 3, 6});
    CHECK(*iou(top_row, top_row) == 1.0);
    CHECK(*iou(mask_of(3, 3, {0}), mask_of(3, 3, {8})) == 0.0);
    CHECK(*iou(top_row, left_col) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_FALSE(iou(mask_of(3, 3, {}), mask_of(3, 3, {})).has_value());
    CHECK_THROWS_AS(iou(top_row, mask_of(2, 2, {0})), std::invalid_argument);
}

TEST_CASE("IoU is symmetric and bounded on random masks") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> a(25), b(25);
        for (std::size_t i = 0; i < 25; ++i) {
            a[i] = rng() % 3 == 0;
            b[i] = rng() % 2 == 0;
        }
        const auto ma = make_mask(5, 5, a);
        const auto mb = make_mask(5, 5, b);
        const auto ab = iou(ma, mb);
        CHECK(ab == iou(mb, ma));
        CHECK(ab == oracle::iou(to_bits(ma), to_bits(mb)));
        if (ab) {
            CHECK(*ab >= 0.0);
            CHECK(*ab <= 1.0);
        }
    }
}

TEST_CASE("baseline pair count for nine tokens") {
    // a painting of a [giraffe] in the [cubism] style: seven ordinary tokens
    const std::vector<int> roles{0, 0, 0, 0, 1, 0, 0, 2, 0};
    const auto manifest = manifest_for_roles(roles);
    std::vector<BinaryMask> tokens;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        tokens.push_back(mask_of(2, 2, {i % 4}));
    }
    const auto r = baseline_miou(tokens[4], tokens[7], tokens, manifest.content_span, manifest.style_span,
                                 manifest.special_flags());
    CHECK(r.n_pairs == 14);
}

TEST_CASE("baseline of identical masks is one") {
    const std::vector<int> roles{3, 0, 1, 0, 2, 3};
    const auto manifest = manifest_for_roles(roles);
    const auto same = mask_of(3, 3, {1, 4, 7});
    std::vector<BinaryMask> tokens(roles.size(), same);
    const auto r = baseline_miou(same, same, tokens, manifest.content_span, manifest.style_span,
                                 manifest.special_flags());
    CHECK(*r.miou == 1.0);
    CHECK(r.n_pairs == 4);
}

TEST_CASE("delta arithmetic on a hand-built case") {
    // pixels 0..9; C = {0,1}, S = {1,2,3,4} -> IoU_CS = 1/5.
    // W1 = {0,1}: IoU with C 1, with S 1/5. W2 = {0,2,3,4}: with C 1/5, with S 3/5.
    // mIoU_B = (1 + 0.2 + 0.2 + 0.6) / 4 = 0.5, delta = 0.3.
    const std::vector<int> roles{1, 2, 0, 0};
    const auto manifest = manifest_for_roles(roles);
    const auto c = mask_of(10, 1, {0, 1});
    const auto s = mask_of(10, 1, {1, 2, 3, 4});
    const std::vector<BinaryMask> tokens{c, s, mask_of(10, 1, {0, 1}), mask_of(10, 1, {0, 2, 3, 4})};
    const auto rec = combine_masks(c, s, tokens, manifest, ThresholdPolicy::fixed(0.4));
    CHECK(std::fabs(*rec.iou_cs - 0.2) <= 1e-12);
    CHECK(std::fabs(*rec.miou_b - 0.5) <= 1e-12);
    CHECK(std::fabs(*rec.delta - 0.3) <= 1e-12);
    CHECK(rec.support_c == 2);
    CHECK(rec.support_s == 4);
}

TEST_CASE("separation record on half-plane maps") {
    // content on the left, style on the right, one ordinary token everywhere.
    const std::size_t w = 8, h = 4;
    std::vector<double> left(w * h), right(w * h), flat(w * h, 1.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            left[y * w + x] = x < w / 2 ? 1.0 : 0.0;
            right[y * w + x] = x < w / 2 ? 0.0 : 1.0;
        }
    }
    const auto manifest = manifest_for_roles({3, 1, 0, 2, 3});
    ComponentMaps comps{map_of(w, h, left), map_of(w, h, right)};
    const std::vector<AttributionMap> maps{map_of(w, h, flat), comps.content, map_of(w, h, flat), comps.style,
                                           map_of(w, h, flat)};
    const auto rec = separation_record(comps, maps, manifest, ThresholdPolicy::fixed(0.4));
    CHECK(*rec.iou_cs == 0.0);
    CHECK(*rec.miou_b == 0.5);
    CHECK(*rec.delta == 0.5);
    CHECK(rec.n_pairs == 2);

    ComponentMaps same{comps.content, comps.content};
    const std::vector<AttributionMap> same_maps{map_of(w, h, flat), comps.content, comps.content, comps.content,
                                                map_of(w, h, flat)};
    const auto ent = separation_record(same, same_maps, manifest, ThresholdPolicy::fixed(0.4));
    CHECK(*ent.iou_cs == 1.0);
    CHECK(*ent.miou_b == 1.0);
    CHECK(*ent.delta == 0.0);
}

TEST_CASE("both component masks empty gives a degenerate record") {
    const auto manifest = manifest_for_roles({1, 2, 0});
    const auto empty = mask_of(2, 2, {});
    const std::vector<BinaryMask> tokens{empty, empty, mask_of(2, 2, {0})};
    const auto rec = combine_masks(empty, empty, tokens, manifest, ThresholdPolicy::fixed(0.9));
    CHECK(rec.degenerate);
    CHECK_FALSE(rec.iou_cs.has_value());
    CHECK_FALSE(rec.delta.has_value());
}

TEST_CASE("random mask sets agree with the pair-enumeration oracle") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n_tok = 3 + rng() % 8;
        std::vector<int> roles(n_tok, 0);
        roles.front() = 3;
        roles.back() = 3;
        const std::size_t c = 1 + rng() % (n_tok - 2);
        std::size_t s = 1 + rng() % (n_tok - 2);
        if (s == c) {
            s = c == 1 ? n_tok - 2 : 1;
        }
        if (s == c) {
            continue;
        }
        roles[c] = 1;
        roles[s] = 2;
        const auto manifest = manifest_for_roles(roles);
        const std::size_t side = 2 + rng() % 5;
        std::vector<BinaryMask> tokens;
        std::vector<oracle::Bits> bits;
        for (std::size_t k = 0; k < n_tok; ++k) {
            std::vector<std::uint8_t> b(side * side);
            const auto density = 1 + rng() % 4;
            for (auto& x : b) {
                x = rng() % 5 < density;
            }
            tokens.push_back(make_mask(side, side, b));
            bits.push_back(to_bits(tokens.back()));
        }
        const auto rec = combine_masks(tokens[c], tokens[s], tokens, manifest, ThresholdPolicy::fixed(0.5));
        const auto ref = oracle::baseline(bits[c], bits[s], bits, roles);
        CHECK(rec.n_pairs == ref.n_pairs);
        if (rec.degenerate) {
            CHECK(tokens[c].support + tokens[s].support == 0);
            continue;
        }
        CHECK(rec.iou_cs == oracle::iou(bits[c], bits[s]));
        REQUIRE(rec.miou_b.has_value() == ref.mean.has_value());
        if (ref.mean) {
            CHECK(std::fabs(*rec.miou_b - *ref.mean) <= 1e-12);
        }
    }
}
