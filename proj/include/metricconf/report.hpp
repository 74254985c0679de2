#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metricconf/confidence.hpp"
#include "metricconf/correlation.hpp"
#include "metricconf/error.hpp"
#include "metricconf/significance.hpp"
#include "metricconf/simulation.hpp"

namespace metricconf {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_name = "metricconf";
inline constexpr const char* tool_version = "0.1.0";

// Plot-data doubles carry 17 significant digits so re-parsing the CSV
// recovers the exact binary values.
inline std::string format_sig17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline Json json_of(const CorrelationResult& r) {
    Json j;
    j["level"] = to_string(r.level);
    j["coefficient"] = to_string(r.coefficient);
    if (r.value)
        j["value"] = *r.value;
    else
        j["value"] = nullptr;
    j["skipped_inputs"] = r.skipped_inputs;
    return j;
}

inline Json json_of(const ConfidenceInterval& ci) {
    Json j;
    j["method"] = to_string(ci.method);
    j["point"] = ci.point;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["alpha"] = ci.alpha;
    j["resamples"] = ci.resamples;
    j["seed"] = ci.seed;
    j["degenerate_resamples"] = ci.degenerate_resamples;
    return j;
}

inline Json json_of(const TestResult& t) {
    Json j;
    j["method"] = to_string(t.method);
    j["p_value"] = t.p_value;
    j["delta"] = t.delta;
    j["resamples"] = t.resamples;
    j["seed"] = t.seed;
    j["tie_policy"] = to_string(t.tie_policy);
    j["degenerate_resamples"] = t.degenerate_resamples;
    j["tied_resamples"] = t.tied_resamples;
    j["experimental"] = t.experimental;
    return j;
}

inline Json json_of(const CoverageReport& r) {
    Json j;
    j["trials"] = r.trials;
    j["contained"] = r.contained;
    j["proportion"] = r.proportion;
    j["total_retries"] = r.total_retries;
    Json records = Json::array();
    for (const auto& rec : r.records) {
        Json row;
        row["point"] = rec.ci.point;
        row["lower"] = rec.ci.lower;
        row["upper"] = rec.ci.upper;
        row["held_out_r"] = rec.held_out_r;
        row["contained"] = rec.contained;
        row["retries"] = rec.retries;
        records.push_back(std::move(row));
    }
    j["records"] = std::move(records);
    return j;
}

inline Json json_of(const PowerCurve& c) {
    Json j;
    j["method"] = to_string(c.method);
    j["alpha"] = c.alpha;
    j["trials"] = c.trials;
    j["resamples"] = c.resamples;
    j["seed"] = c.seed;
    j["tie_policy"] = to_string(c.tie_policy);
    j["k_percent"] = c.k_percent;
    j["power"] = c.power;
    j["rejections"] = c.rejections;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw data_error("cannot open for writing: " + path);
    out << content;
    if (!out)
        throw data_error("write failed: " + path);
}

// Reports never embed timestamps or environment state, so rerunning the
// same config and seed reproduces the file byte for byte.
inline void write_json_report(const std::string& path, const Json& report) {
    write_text_file(path, report.dump(2) + "\n");
}

enum class PlotKind { forest, pairwise, power_curve };

inline std::string render_forest_svg(const Json& intervals);

namespace detail {

inline const Json& report_section(const Json& report, const char* key) {
    const auto it = report.find(key);
    if (it == report.end())
        throw data_error(std::string("report has no \"") + key + "\" section");
    return *it;
}

// Inserts a suffix before the extension: out/pairwise.csv -> out/pairwise_flags.csv.
inline std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

} // namespace detail

// Derives flat plot data from a report. forest reads the per-metric CI
// rows; pairwise writes the p-value matrix plus a parallel flags matrix
// (cells none/raw/corrected, empty diagonal) to a sibling _flags file;
// power-curve flattens every curve to one row per degradation level.
inline void emit_plot_data(const Json& report, PlotKind kind, const std::string& path) {
    switch (kind) {
    case PlotKind::forest: {
        const Json& rows = detail::report_section(report, "intervals");
        std::string csv = "metric,level,point,lower,upper\n";
        for (const auto& row : rows) {
            csv += csv_field(row.at("metric").get<std::string>()) + ',';
            csv += row.at("level").get<std::string>() + ',';
            csv += format_sig17(row.at("point").get<double>()) + ',';
            csv += format_sig17(row.at("lower").get<double>()) + ',';
            csv += format_sig17(row.at("upper").get<double>()) + '\n';
        }
        write_text_file(path, csv);
        break;
    }
    case PlotKind::pairwise: {
        const Json& section = detail::report_section(report, "pairwise");
        const auto metrics = section.at("metrics").get<std::vector<std::string>>();
        const Json& p = section.at("p_values");
        const Json& raw = section.at("raw_significant");
        const Json& corrected = section.at("corrected_significant");

        std::string header = "metric";
        for (const auto& m : metrics)
            header += ',' + csv_field(m);
        header += '\n';

        std::string values = header, flags = header;
        for (std::size_t i = 0; i < metrics.size(); ++i) {
            values += csv_field(metrics[i]);
            flags += csv_field(metrics[i]);
            for (std::size_t j = 0; j < metrics.size(); ++j) {
                values += ',';
                flags += ',';
                if (i == j)
                    continue;
                values += format_sig17(p.at(i).at(j).get<double>());
                if (corrected.at(i).at(j).get<bool>())
                    flags += "corrected";
                else if (raw.at(i).at(j).get<bool>())
                    flags += "raw";
                else
                    flags += "none";
            }
            values += '\n';
            flags += '\n';
        }
        write_text_file(path, values);
        write_text_file(detail::with_suffix(path, "_flags"), flags);
        break;
    }
    case PlotKind::power_curve: {
        const Json& section = detail::report_section(report, "power");
        std::string csv = "k_percent,method,power\n";
        for (const auto& curve : section.at("curves")) {
            const auto method = curve.at("method").get<std::string>();
            const auto& ks = curve.at("k_percent");
            const auto& power = curve.at("power");
            for (std::size_t i = 0; i < ks.size(); ++i) {
                csv += format_sig17(ks.at(i).get<double>()) + ',';
                csv += method + ',';
                csv += format_sig17(power.at(i).get<double>()) + '\n';
            }
        }
        write_text_file(path, csv);
        break;
    }
    }
}

// Static forest chart: one horizontal interval and point marker per CI
// row, with a five-tick axis. Input is the "intervals" array of a report.
inline std::string render_forest_svg(const Json& intervals) {
    if (intervals.empty())
        throw data_error("forest plot needs at least one interval");

    double lo = intervals.at(0).at("lower").get<double>();
    double hi = intervals.at(0).at("upper").get<double>();
    for (const auto& row : intervals) {
        lo = std::min(lo, row.at("lower").get<double>());
        hi = std::max(hi, row.at("upper").get<double>());
    }
    double pad = (hi - lo) * 0.08;
    if (pad == 0.0)
        pad = 0.05;
    lo -= pad;
    hi += pad;

    const double left = 170.0, right = 620.0;
    const double row_height = 26.0, top = 46.0;
    const double height = top + row_height * static_cast<double>(intervals.size()) + 44.0;
    const auto x_of = [&](double v) { return left + (v - lo) / (hi - lo) * (right - left); };
    const auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"660\" height=\"" +
           num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double axis_y = height - 34.0;
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(right) +
           "\" y2=\"" + num(axis_y) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick < 5; ++tick) {
        const double v = lo + (hi - lo) * tick / 4.0;
        const double x = x_of(v);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(axis_y + 5.0) + "\" stroke=\"black\"/>\n";
        char label[64];
        std::snprintf(label, sizeof(label), "%.3g", v);
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(axis_y + 18.0) +
               "\" text-anchor=\"middle\">" + label + "</text>\n";
    }

    std::size_t i = 0;
    for (const auto& row : intervals) {
        const double y = top + row_height * static_cast<double>(i++);
        const std::string label =
            row.at("metric").get<std::string>() + " (" + row.at("level").get<std::string>() + ")";
        std::string escaped;
        for (char c : label) {
            if (c == '&')
                escaped += "&amp;";
            else if (c == '<')
                escaped += "&lt;";
            else if (c == '>')
                escaped += "&gt;";
            else
                escaped += c;
        }
        svg += "<text x=\"" + num(left - 10.0) + "\" y=\"" + num(y + 4.0) +
               "\" text-anchor=\"end\">" + escaped + "</text>\n";
        svg += "<line x1=\"" + num(x_of(row.at("lower").get<double>())) + "\" y1=\"" + num(y) +
               "\" x2=\"" + num(x_of(row.at("upper").get<double>())) + "\" y2=\"" + num(y) +
               "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
        svg += "<circle cx=\"" + num(x_of(row.at("point").get<double>())) + "\" cy=\"" + num(y) +
               "\" r=\"3.5\" fill=\"steelblue\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace metricconf
