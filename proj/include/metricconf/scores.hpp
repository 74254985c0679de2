#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metricconf/error.hpp"
#include "metricconf/matrix.hpp"

namespace metricconf {

struct ScoreRecord {
    std::string metric_name;
    std::string system_id;
    std::string input_id;
    double score = 0.0;

    friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// One metric's scores over the shared (systems x inputs) grid.
struct ScoreMatrix {
    std::string metric_name;
    std::vector<std::string> systems;
    std::vector<std::string> inputs;
    Matrix values;
};

// Aligned score matrices for several metrics: identical system and input
// orderings across all of them.
struct ScoreSet {
    std::vector<std::string> systems;
    std::vector<std::string> inputs;
    std::map<std::string, Matrix> matrices;

    const Matrix& matrix(const std::string& metric) const {
        const auto it = matrices.find(metric);
        if (it == matrices.end())
            throw data_error("unknown metric name: " + metric);
        return it->second;
    }

    std::vector<std::string> metric_names() const {
        std::vector<std::string> names;
        names.reserve(matrices.size());
        for (const auto& [name, _] : matrices)
            names.push_back(name);
        return names;
    }
};

enum class ScoreFormat { jsonl, csv };

enum class MissingPolicy {
    strict,         // any missing (metric, system, input) cell is an error
    drop_incomplete // drop incomplete inputs, then incomplete systems
};

namespace detail {

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

inline ScoreRecord record_from_json(const nlohmann::json& obj, std::size_t line_no) {
    const auto field = [&](const char* key) -> const nlohmann::json& {
        const auto it = obj.find(key);
        if (it == obj.end())
            throw data_error("line " + std::to_string(line_no) + ": missing field \"" + key + "\"");
        return *it;
    };
    ScoreRecord rec;
    rec.metric_name = field("metric").get<std::string>();
    rec.system_id = field("system_id").get<std::string>();
    rec.input_id = field("input_id").get<std::string>();
    const auto& score = field("score");
    if (!score.is_number())
        throw data_error("line " + std::to_string(line_no) + ": score is not a finite number");
    rec.score = score.get<double>();
    return rec;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    fields.push_back(current);
    return fields;
}

} // namespace detail

// Reads score records from a JSONL or CSV stream, in file order, without
// deduplication. Errors carry 1-based line numbers.
inline std::vector<ScoreRecord> parse_scores(std::istream& in, ScoreFormat format) {
    std::vector<ScoreRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty())
            continue;
        if (format == ScoreFormat::jsonl) {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw data_error("line " + std::to_string(line_no) + ": " + e.what());
            }
            if (!obj.is_object())
                throw data_error("line " + std::to_string(line_no) + ": expected a JSON object");
            try {
                records.push_back(detail::record_from_json(obj, line_no));
            } catch (const nlohmann::json::exception& e) {
                throw data_error("line " + std::to_string(line_no) + ": " + e.what());
            }
        } else {
            const auto fields = detail::split_csv_line(line);
            if (!saw_header) {
                if (fields != std::vector<std::string>{"metric", "system_id", "input_id", "score"})
                    throw data_error("line " + std::to_string(line_no) +
                                     ": expected header metric,system_id,input_id,score");
                saw_header = true;
                continue;
            }
            if (fields.size() != 4)
                throw data_error("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                 std::to_string(fields.size()));
            ScoreRecord rec;
            rec.metric_name = fields[0];
            rec.system_id = fields[1];
            rec.input_id = fields[2];
            try {
                std::size_t consumed = 0;
                rec.score = std::stod(fields[3], &consumed);
                if (consumed != fields[3].size())
                    throw std::invalid_argument(fields[3]);
            } catch (const std::exception&) {
                throw data_error("line " + std::to_string(line_no) + ": bad score \"" + fields[3] +
                                 "\"");
            }
            records.push_back(rec);
        }
        if (!std::isfinite(records.back().score))
            throw data_error("line " + std::to_string(line_no) + ": score is not finite");
    }
    return records;
}

inline std::vector<ScoreRecord> parse_scores(const std::string& text, ScoreFormat format) {
    std::istringstream in(text);
    return parse_scores(in, format);
}

// Assembles aligned, complete matrices for the requested metrics. Axes are
// ordered lexicographically by id so identical inputs always yield identical
// matrices regardless of record order.
inline ScoreSet build_score_set(const std::vector<ScoreRecord>& records,
                                const std::vector<std::string>& metrics,
                                MissingPolicy policy = MissingPolicy::strict) {
    if (metrics.empty())
        throw data_error("build_score_set: no metrics requested");

    std::set<std::string> requested(metrics.begin(), metrics.end());
    std::map<std::string, std::map<std::pair<std::string, std::string>, double>> cells;
    std::set<std::string> systems_seen, inputs_seen;
    for (const auto& rec : records) {
        if (!requested.contains(rec.metric_name))
            continue;
        auto [it, inserted] =
            cells[rec.metric_name].emplace(std::pair{rec.system_id, rec.input_id}, rec.score);
        if (!inserted)
            throw data_error("duplicate record for (" + rec.metric_name + ", " + rec.system_id +
                             ", " + rec.input_id + ")");
        systems_seen.insert(rec.system_id);
        inputs_seen.insert(rec.input_id);
    }
    for (const auto& metric : requested) {
        if (!cells.contains(metric) || cells[metric].empty())
            throw data_error("no records for requested metric " + metric);
    }

    std::vector<std::string> systems(systems_seen.begin(), systems_seen.end());
    std::vector<std::string> inputs(inputs_seen.begin(), inputs_seen.end());

    const auto has_cell = [&](const std::string& sys, const std::string& inp) {
        for (const auto& metric : requested)
            if (!cells[metric].contains({sys, inp}))
                return false;
        return true;
    };

    if (policy == MissingPolicy::strict) {
        for (const auto& sys : systems)
            for (const auto& inp : inputs)
                for (const auto& metric : requested)
                    if (!cells[metric].contains({sys, inp}))
                        throw data_error("missing score for (" + metric + ", " + sys + ", " + inp +
                                         "); use the drop-incomplete policy to salvage");
    } else {
        std::erase_if(inputs, [&](const std::string& inp) {
            return !std::all_of(systems.begin(), systems.end(),
                                [&](const std::string& sys) { return has_cell(sys, inp); });
        });
        std::erase_if(systems, [&](const std::string& sys) {
            return !std::all_of(inputs.begin(), inputs.end(),
                                [&](const std::string& inp) { return has_cell(sys, inp); });
        });
    }

    if (systems.empty() || inputs.empty())
        throw data_error("no complete rows/columns remain after aligning the requested metrics");

    ScoreSet set;
    set.systems = systems;
    set.inputs = inputs;
    for (const auto& metric : requested) {
        Matrix m(systems.size(), inputs.size());
        for (std::size_t i = 0; i < systems.size(); ++i)
            for (std::size_t j = 0; j < inputs.size(); ++j)
                m(i, j) = cells[metric].at({systems[i], inputs[j]});
        set.matrices.emplace(metric, std::move(m));
    }
    return set;
}

inline std::vector<ScoreRecord> to_records(const ScoreSet& set) {
    std::vector<ScoreRecord> records;
    for (const auto& [metric, matrix] : set.matrices)
        for (std::size_t i = 0; i < set.systems.size(); ++i)
            for (std::size_t j = 0; j < set.inputs.size(); ++j)
                records.push_back({metric, set.systems[i], set.inputs[j], matrix(i, j)});
    return records;
}

// JSONL serialization; doubles round-trip exactly.
inline void write_scores_jsonl(const std::vector<ScoreRecord>& records, std::ostream& out) {
    for (const auto& rec : records) {
        nlohmann::ordered_json obj{{"metric", rec.metric_name},
                                   {"system_id", rec.system_id},
                                   {"input_id", rec.input_id},
                                   {"score", rec.score}};
        out << obj.dump() << '\n';
    }
}

} // namespace metricconf
