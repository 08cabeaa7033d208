#include "daamsep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace daamsep {

void RunningStats::add(double x) noexcept {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
}

void RunningStats::merge(const RunningStats& o) noexcept {
    if (o.n == 0) {
        return;
    }
    if (n == 0) {
        *this = o;
        return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
}

double RunningStats::variance() const noexcept { return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1); }

double RunningStats::sd() const noexcept { return std::sqrt(variance()); }

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            return h;
        }
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("incomplete_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("incomplete_beta: x must be within [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        throw std::invalid_argument("student_t_cdf: df must be positive");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

PairedSample paired_sample(std::span<const SeparationRecord> records) {
    PairedSample s;
    for (const auto& r : records) {
        if (r.iou_cs && r.miou_b) {
            s.pairs.emplace_back(*r.iou_cs, *r.miou_b);
        }
    }
    return s;
}

TTestResult paired_t_test(const PairedSample& sample, Alternative alt) {
    if (sample.n() < 2) {
        throw std::invalid_argument("paired_t_test needs at least 2 pairs");
    }
    RunningStats d;
    for (const auto& [cs, b] : sample.pairs) {
        d.add(b - cs);
    }
    TTestResult r;
    r.df = static_cast<int>(sample.n() - 1);
    const double sd = d.sd();
    if (sd == 0.0) {
        if (d.mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
            if (alt == Alternative::Greater) {
                r.p = 0.5;
            }
            return r;
        }
        r.infinite_t = true;
        r.t = d.mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p = (alt == Alternative::Greater && d.mean < 0) ? 1.0 : 0.0;
        return r;
    }
    r.t = d.mean / (sd / std::sqrt(static_cast<double>(sample.n())));
    const double x = r.df / (r.df + r.t * r.t);
    const double two_sided = std::clamp(incomplete_beta(r.df / 2.0, 0.5, x), 0.0, 1.0);
    if (alt == Alternative::TwoSided) {
        r.p = two_sided;
    } else {
        r.p = r.t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
    }
    return r;
}

std::optional<double> effect_size(const PairedSample& sample) {
    if (sample.n() < 2) {
        throw std::invalid_argument("effect_size needs at least 2 pairs");
    }
    RunningStats cs;
    RunningStats b;
    for (const auto& [c, m] : sample.pairs) {
        cs.add(c);
        b.add(m);
    }
    const double pooled = std::sqrt((cs.variance() + b.variance()) / 2.0);
    if (pooled == 0.0) {
        return std::nullopt;
    }
    return std::abs(b.mean - cs.mean) / pooled;
}

const char* to_string(ComponentKind kind) {
    switch (kind) {
    case ComponentKind::Content: return "content";
    case ComponentKind::Artist: return "artist";
    case ComponentKind::Movement: return "movement";
    }
    return "unknown";
}

std::vector<ComponentSummary> component_summaries(std::span<const SeparationRecord> records, GroupBy group_by) {
    std::map<std::pair<std::string, ComponentKind>, RunningStats> groups;
    for (const auto& r : records) {
        if (!r.delta) {
            continue;
        }
        if (group_by == GroupBy::Content) {
            groups[{r.content_label, ComponentKind::Content}].add(*r.delta);
        } else {
            const auto kind = r.style_kind == StyleKind::Artist ? ComponentKind::Artist : ComponentKind::Movement;
            groups[{r.style_label, kind}].add(*r.delta);
        }
    }
    std::vector<ComponentSummary> out;
    out.reserve(groups.size());
    for (const auto& [key, st] : groups) {
        out.push_back({key.first, key.second, st.mean, st.sd(), st.n, st.n == 1});
    }
    std::sort(out.begin(), out.end(), [](const ComponentSummary& a, const ComponentSummary& b) {
        if (a.mean_delta != b.mean_delta) {
            return a.mean_delta > b.mean_delta;
        }
        return std::tie(a.label, a.kind) < std::tie(b.label, b.kind);
    });
    return out;
}

std::vector<SweepPoint> threshold_sweep(std::span<const SeparationRecord> records,
                                        std::span<const ThresholdPolicy> policies) {
    std::vector<SweepPoint> points;
    points.reserve(policies.size());
    for (const auto& policy : policies) {
        SweepPoint pt;
        pt.policy = policy;
        double cs_sum = 0.0;
        double b_sum = 0.0;
        double delta_sum = 0.0;
        double support_sum = 0.0;
        std::size_t n_complete = 0;
        std::vector<SeparationRecord> selected;
        for (const auto& r : records) {
            if (!(r.policy == policy)) {
                continue;
            }
            ++pt.n_images;
            support_sum += (static_cast<double>(r.support_c) + static_cast<double>(r.support_s)) / 2.0;
            if (r.delta) {
                cs_sum += *r.iou_cs;
                b_sum += *r.miou_b;
                delta_sum += *r.delta;
                ++n_complete;
            } else {
                ++pt.n_missing;
            }
            selected.push_back(r);
        }
        pt.present = pt.n_images > 0;
        if (pt.present) {
            pt.mean_support = support_sum / static_cast<double>(pt.n_images);
        }
        if (n_complete > 0) {
            const double n = static_cast<double>(n_complete);
            pt.mean_iou_cs = cs_sum / n;
            pt.mean_miou_b = b_sum / n;
            pt.mean_delta = delta_sum / n;
        }
        const auto sample = paired_sample(selected);
        if (sample.n() >= 2) {
            pt.t_test = paired_t_test(sample);
            pt.effect_size = effect_size(sample);
        }
        points.push_back(std::move(pt));
    }
    return points;
}

std::optional<double> mean_effect_size(std::span<const SweepPoint> points) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : points) {
        if (p.present && p.effect_size) {
            sum += *p.effect_size;
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(n);
}

} // namespace daamsep
