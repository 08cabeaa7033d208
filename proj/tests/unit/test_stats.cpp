#include <doctest.h>

#include <cmath>
#include <random>

#include "daamsep/corpus.hpp"
#include "daamsep/stats.hpp"
#include "oracles.hpp"

using namespace daamsep;

namespace {

PairedSample sample_from_diffs(const std::vector<double>& d) {
    PairedSample s;
    for (double x : d) {
        s.pairs.emplace_back(0.0, x);
    }
    return s;
}

SeparationRecord rec(const std::string& content, const std::string& style, StyleKind kind, double cs, double b,
                     ThresholdPolicy policy = ThresholdPolicy::fixed(0.4)) {
    SeparationRecord r;
    r.content_label = content;
    r.style_label = style;
    r.style_kind = kind;
    r.policy = policy;
    r.iou_cs = cs;
    r.miou_b = b;
    r.delta = b - cs;
    r.support_c = 10;
    r.support_s = 20;
    return r;
}

} // namespace

// Reference values computed with mpmath at 50 significant digits.
TEST_CASE("incomplete beta reference values") {
    struct Case {
        double a, b, x, expected;
    };
    const Case cases[] = {
        {2.5, 0.5, 0.3, 0.018927124071945651653},
        {0.5, 0.5, 0.9, 0.79516723530086657191},
        {10.0, 3.0, 0.75, 0.39067500829696655273},
        {1.0, 1.0, 0.42, 0.42},
        {30.0, 0.5, 0.99, 0.43933436890525101195},
    };
    for (const auto& c : cases) {
        CHECK(std::fabs(incomplete_beta(c.a, c.b, c.x) - c.expected) <= 1e-12);
    }
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("Student t CDF reference values") {
    struct Case {
        double t, df, expected;
    };
    const Case cases[] = {
        {1.5, 3, 0.88470806737758847386},   {-0.7, 10, 0.24994378508644218108},
        {2.2, 1, 0.86420025121990814473},   {6.0, 30, 0.99999930286156163976},
        {12.0, 7, 0.99999682084481090745},
    };
    for (const auto& c : cases) {
        CHECK(std::fabs(student_t_cdf(c.t, c.df) - c.expected) <= 1e-12);
    }
    CHECK(student_t_cdf(0.0, 5) == 0.5);
    for (double t : {-3.0, -0.4, 0.9, 2.7}) {
        CHECK(std::fabs(student_t_cdf(t, 4) - static_cast<double>(oracle::t_cdf_df4(t))) <= 1e-13);
    }
}

TEST_CASE("paired t-test on differences 1..5") {
    const auto r = paired_t_test(sample_from_diffs({1, 2, 3, 4, 5}));
    CHECK(std::fabs(r.t - 4.2426406871192851464) <= 1e-12);
    CHECK(r.df == 4);
    CHECK(std::fabs(r.p - 0.013235599563682689519) <= 1e-12);
    const long double closed = 2.0L * (1.0L - oracle::t_cdf_df4(static_cast<long double>(r.t)));
    CHECK(std::fabs(r.p - static_cast<double>(closed)) <= 1e-12);

    const auto greater = paired_t_test(sample_from_diffs({1, 2, 3, 4, 5}), Alternative::Greater);
    CHECK(std::fabs(greater.p - r.p / 2) <= 1e-15);
}

TEST_CASE("t-test edge cases") {
    const auto zero = paired_t_test(sample_from_diffs({0, 0, 0, 0}));
    CHECK(zero.t == 0.0);
    CHECK(zero.p == 1.0);

    const auto constant = paired_t_test(sample_from_diffs({0.3, 0.3, 0.3}));
    CHECK(constant.infinite_t);
    CHECK(constant.p == 0.0);

    CHECK_THROWS_AS(paired_t_test(sample_from_diffs({1.0})), std::invalid_argument);
}

TEST_CASE("t statistic ignores a common shift of both series") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    PairedSample a, b;
    for (int i = 0; i < 30; ++i) {
        const double cs = u(rng);
        const double mb = u(rng) + 0.2;
        a.pairs.emplace_back(cs, mb);
        b.pairs.emplace_back(cs + 0.25, mb + 0.25);
    }
    CHECK(paired_t_test(a).t == doctest::Approx(paired_t_test(b).t).epsilon(1e-9));
}

TEST_CASE("systematically separated corpus is significant") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> noise(0.0, 0.05);
    PairedSample s;
    for (int i = 0; i < 40; ++i) {
        s.pairs.emplace_back(0.2 + noise(rng), 0.45 + noise(rng));
    }
    CHECK(paired_t_test(s).p < 0.001);
}

TEST_CASE("effect size") {
    PairedSample same;
    same.pairs = {{0.1, 0.1}, {0.4, 0.4}, {0.3, 0.3}};
    CHECK(*effect_size(same) == 0.0);

    PairedSample flat;
    flat.pairs = {{0.2, 0.5}, {0.2, 0.5}};
    CHECK_FALSE(effect_size(flat).has_value());

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PairedSample s;
    std::vector<double> cs, b;
    for (int i = 0; i < 25; ++i) {
        cs.push_back(u(rng));
        b.push_back(u(rng));
        s.pairs.emplace_back(cs.back(), b.back());
    }
    const auto [m_cs, v_cs] = oracle::mean_var(cs);
    const auto [m_b, v_b] = oracle::mean_var(b);
    CHECK(std::fabs(*effect_size(s) - std::fabs(m_b - m_cs) / std::sqrt((v_cs + v_b) / 2)) <= 1e-9);
}

TEST_CASE("running stats merge equals sequential accumulation") {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(101);
    for (auto& x : v) {
        x = u(rng);
    }
    RunningStats all, left, right;
    for (std::size_t i = 0; i < v.size(); ++i) {
        all.add(v[i]);
        (i < 37 ? left : right).add(v[i]);
    }
    left.merge(right);
    const auto [m, var] = oracle::mean_var(v);
    CHECK(left.n == all.n);
    CHECK(std::fabs(left.mean - m) <= 1e-12);
    CHECK(std::fabs(left.variance() - var) <= 1e-12);
    CHECK(std::fabs(all.variance() - var) <= 1e-12);
}

TEST_CASE("component summaries") {
    std::vector<SeparationRecord> records{
        rec("giraffe", "Rembrandt", StyleKind::Artist, 0.1, 0.5),
        rec("giraffe", "Cubism", StyleKind::Movement, 0.1, 0.6),
        rec("cow", "Rembrandt", StyleKind::Artist, 0.2, 0.3),
    };
    const auto content = component_summaries(records, GroupBy::Content);
    REQUIRE(content.size() == 2);
    CHECK(content[0].label == "giraffe");
    CHECK(content[0].mean_delta == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(content[0].sd_delta == doctest::Approx(0.0707106781186548).epsilon(1e-9));
    CHECK(content[0].n == 2);
    CHECK(content[1].single);
    CHECK(content[1].sd_delta == 0.0);

    const auto style = component_summaries(records, GroupBy::Style);
    REQUIRE(style.size() == 2);
    CHECK(style[0].label == "Cubism");
    CHECK(style[0].kind == ComponentKind::Movement);
    CHECK(style[1].kind == ComponentKind::Artist);

    // ties break by label
    std::vector<SeparationRecord> tied{rec("zebra", "X", StyleKind::Artist, 0, 0.5),
                                       rec("apple", "X", StyleKind::Artist, 0, 0.5)};
    CHECK(component_summaries(tied, GroupBy::Content)[0].label == "apple");
}

TEST_CASE("summaries over the bundled label lists") {
    const auto contents = bundled_contents();
    const auto styles = bundled_styles();
    std::vector<SeparationRecord> records;
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::size_t with_delta = 0;
    for (const auto& c : contents) {
        for (const auto& s : styles) {
            records.push_back(rec(c, s.label, s.kind, u(rng), u(rng) + 0.2));
            if (rng() % 10 == 0) {
                records.back().delta.reset();
                records.back().miou_b.reset();
            } else {
                ++with_delta;
            }
        }
    }
    const auto by_content = component_summaries(records, GroupBy::Content);
    const auto by_style = component_summaries(records, GroupBy::Style);
    CHECK(by_content.size() == 80);
    CHECK(by_style.size() == 50);
    std::size_t artists = 0, movements = 0, total = 0;
    for (const auto& s : by_style) {
        artists += s.kind == ComponentKind::Artist;
        movements += s.kind == ComponentKind::Movement;
        total += s.n;
    }
    CHECK(artists == 23);
    CHECK(movements == 27);
    CHECK(total == with_delta);
    for (std::size_t i = 1; i < by_content.size(); ++i) {
        CHECK(by_content[i - 1].mean_delta >= by_content[i].mean_delta);
    }
}

TEST_CASE("threshold sweep") {
    const auto f4 = ThresholdPolicy::fixed(0.4);
    const auto p7 = ThresholdPolicy::percentile(0.7);
    std::vector<SeparationRecord> records{
        rec("a", "s", StyleKind::Artist, 0.1, 0.5, f4),
        rec("b", "s", StyleKind::Artist, 0.2, 0.4, f4),
        rec("c", "s", StyleKind::Artist, 0.3, 0.7, f4),
    };
    records.push_back(records[0]);
    records.back().policy = ThresholdPolicy::fixed(0.9);
    records.back().delta.reset();
    records.back().iou_cs.reset();

    const std::vector<ThresholdPolicy> policies{f4, p7, ThresholdPolicy::fixed(0.9)};
    const auto pts = threshold_sweep(records, policies);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].present);
    CHECK(pts[0].n_images == 3);
    CHECK(pts[0].mean_iou_cs == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(pts[0].mean_miou_b == doctest::Approx(1.6 / 3).epsilon(1e-12));
    CHECK(std::fabs(pts[0].mean_delta - (pts[0].mean_miou_b - pts[0].mean_iou_cs)) <= 1e-12);
    CHECK(pts[0].mean_support == 15.0);
    REQUIRE(pts[0].t_test.has_value());
    CHECK(pts[0].t_test->df == 2);
    CHECK_FALSE(pts[1].present);
    CHECK(pts[2].present);
    CHECK(pts[2].n_missing == 1);
    CHECK_FALSE(pts[2].t_test.has_value());

    CHECK(mean_effect_size(pts) == pts[0].effect_size);
}

TEST_CASE("paired sample skips records without both series") {
    std::vector<SeparationRecord> records{rec("a", "s", StyleKind::Artist, 0.1, 0.5),
                                         rec("b", "s", StyleKind::Artist, 0.2, 0.4)};
    records[1].miou_b.reset();
    CHECK(paired_sample(records).n() == 1);
}
