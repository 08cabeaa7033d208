#include "daamsep/records_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace daamsep {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) {
        return std::nullopt;
    }
    return j[key].get<double>();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("malformed number \"" + s + "\"");
    }
    return v;
}

std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return parse_double(s);
}

} // namespace

void to_json(json& j, const SeparationRecord& r) {
    j = json{{"id", r.id},
             {"content", r.content_label},
             {"style", r.style_label},
             {"style_kind", to_string(r.style_kind)},
             {"template", r.template_id},
             {"policy_kind", to_string(r.policy.kind)},
             {"policy_value", r.policy.value},
             {"iou_cs", optional_json(r.iou_cs)},
             {"miou_b", optional_json(r.miou_b)},
             {"delta", optional_json(r.delta)},
             {"support_c", r.support_c},
             {"support_s", r.support_s},
             {"n_pairs", r.n_pairs},
             {"degenerate", r.degenerate},
             {"note", r.note}};
}

void from_json(const json& j, SeparationRecord& r) {
    r.id = j.value("id", std::string{});
    r.content_label = j.at("content").get<std::string>();
    r.style_label = j.at("style").get<std::string>();
    r.style_kind = style_kind_from_string(j.at("style_kind").get<std::string>());
    r.template_id = j.at("template").get<int>();
    r.policy.kind = policy_kind_from_string(j.at("policy_kind").get<std::string>());
    r.policy.value = j.at("policy_value").get<double>();
    r.iou_cs = optional_from(j, "iou_cs");
    r.miou_b = optional_from(j, "miou_b");
    r.delta = optional_from(j, "delta");
    r.support_c = j.at("support_c").get<std::size_t>();
    r.support_s = j.at("support_s").get<std::size_t>();
    r.n_pairs = j.at("n_pairs").get<std::size_t>();
    r.degenerate = j.value("degenerate", false);
    r.note = j.value("note", std::string{});
}

void write_records_csv(std::span<const SeparationRecord> records, std::ostream& out) {
    out << kRecordCsvHeader << '\n';
    for (const auto& r : records) {
        out << csv_escape(r.content_label) << ',' << csv_escape(r.style_label) << ',' << to_string(r.style_kind) << ','
            << r.template_id << ',' << to_string(r.policy.kind) << ',' << format_number(r.policy.value) << ','
            << format_optional(r.iou_cs) << ',' << format_optional(r.miou_b) << ',' << format_optional(r.delta)
            << ',' << r.support_c << ',' << r.support_s << ',' << r.n_pairs << ',' << (r.degenerate ? 1 : 0) << '\n';
    }
}

void write_records_jsonl(std::span<const SeparationRecord> records, std::ostream& out) {
    for (const auto& r : records) {
        out << json(r).dump() << '\n';
    }
}

std::vector<SeparationRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<SeparationRecord> out;
    std::string line;
    if (path.extension() == ".csv") {
        if (!std::getline(in, line) || line != kRecordCsvHeader) {
            throw std::runtime_error(path.string() + ": unexpected CSV header");
        }
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const auto f = split_csv_line(line);
            if (f.size() != 13) {
                throw std::runtime_error(path.string() + ": expected 13 columns, got " + std::to_string(f.size()));
            }
            SeparationRecord r;
            r.content_label = f[0];
            r.style_label = f[1];
            r.style_kind = style_kind_from_string(f[2]);
            r.template_id = std::stoi(f[3]);
            r.policy.kind = policy_kind_from_string(f[4]);
            r.policy.value = parse_double(f[5]);
            r.iou_cs = parse_optional(f[6]);
            r.miou_b = parse_optional(f[7]);
            r.delta = parse_optional(f[8]);
            r.support_c = std::stoul(f[9]);
            r.support_s = std::stoul(f[10]);
            r.n_pairs = std::stoul(f[11]);
            r.degenerate = f[12] == "1";
            out.push_back(std::move(r));
        }
        return out;
    }
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(json::parse(line).get<SeparationRecord>());
        }
    }
    return out;
}

void write_sweep_csv(std::span<const SweepPoint> points, std::ostream& out) {
    out << "policy_kind,policy_value,present,mean_iou_cs,mean_miou_b,mean_delta,mean_support,n_images,n_missing,t,"
           "p,df,effect_size\n";
    for (const auto& p : points) {
        out << to_string(p.policy.kind) << ',' << format_number(p.policy.value) << ',' << (p.present ? 1 : 0) << ',';
        if (p.present) {
            out << format_number(p.mean_iou_cs) << ',' << format_number(p.mean_miou_b) << ','
                << format_number(p.mean_delta) << ',' << format_number(p.mean_support);
        } else {
            out << ",,,";
        }
        out << ',' << p.n_images << ',' << p.n_missing << ',';
        if (p.t_test) {
            out << format_number(p.t_test->t) << ',' << format_number(p.t_test->p) << ',' << p.t_test->df;
        } else {
            out << ",,";
        }
        out << ',' << format_optional(p.effect_size) << '\n';
    }
}

json sweep_to_json(std::span<const SweepPoint> points) {
    json arr = json::array();
    for (const auto& p : points) {
        json j{{"policy_kind", to_string(p.policy.kind)},
               {"policy_value", p.policy.value},
               {"present", p.present},
               {"n_images", p.n_images},
               {"n_missing", p.n_missing}};
        if (p.present) {
            j["mean_iou_cs"] = p.mean_iou_cs;
            j["mean_miou_b"] = p.mean_miou_b;
            j["mean_delta"] = p.mean_delta;
            j["mean_support"] = p.mean_support;
        }
        if (p.t_test) {
            j["t"] = std::isfinite(p.t_test->t) ? json(p.t_test->t) : json(format_number(p.t_test->t));
            j["p"] = p.t_test->p;
            j["df"] = p.t_test->df;
            j["infinite_t"] = p.t_test->infinite_t;
        }
        j["effect_size"] = optional_json(p.effect_size);
        arr.push_back(std::move(j));
    }
    return arr;
}

void write_summaries_csv(std::span<const ComponentSummary> summaries, std::ostream& out) {
    out << "label,kind,mean_delta,sd_delta,n\n";
    for (const auto& s : summaries) {
        out << csv_escape(s.label) << ',' << to_string(s.kind) << ',' << format_number(s.mean_delta) << ','
            << format_number(s.sd_delta) << ',' << s.n << '\n';
    }
}

json summaries_to_json(std::span<const ComponentSummary> summaries) {
    json arr = json::array();
    for (const auto& s : summaries) {
        arr.push_back({{"label", s.label},
                       {"kind", to_string(s.kind)},
                       {"mean_delta", s.mean_delta},
                       {"sd_delta", s.sd_delta},
                       {"n", s.n},
                       {"single", s.single}});
    }
    return arr;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) {
        throw std::runtime_error("failed to write " + path.string());
    }
}

} // namespace daamsep
