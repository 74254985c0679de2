#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "metricconf/confidence.hpp"
#include "metricconf/correlation.hpp"
#include "metricconf/error.hpp"
#include "metricconf/report.hpp"
#include "metricconf/scores.hpp"
#include "metricconf/significance.hpp"
#include "metricconf/simulation.hpp"

namespace metricconf::cli {

inline const char* to_string(ScoreFormat f) {
    return f == ScoreFormat::jsonl ? "jsonl" : "csv";
}

inline const char* to_string(MissingPolicy p) {
    return p == MissingPolicy::strict ? "strict" : "drop-incomplete";
}

inline ScoreFormat resolve_format(const std::string& path, const std::string& flag) {
    if (flag == "jsonl")
        return ScoreFormat::jsonl;
    if (flag == "csv")
        return ScoreFormat::csv;
    if (path.ends_with(".csv"))
        return ScoreFormat::csv;
    if (path.ends_with(".jsonl") || path.ends_with(".ndjson"))
        return ScoreFormat::jsonl;
    throw domain_error("cannot infer the score format of " + path + "; pass --format jsonl|csv");
}

inline std::vector<ScoreRecord> read_score_file(const std::string& path, ScoreFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw data_error("cannot open " + path);
    return parse_scores(in, format);
}

inline std::vector<std::string> all_metric_names(const std::vector<ScoreRecord>& records) {
    std::set<std::string> names;
    for (const auto& rec : records)
        names.insert(rec.metric_name);
    return {names.begin(), names.end()};
}

// Commands that run several randomized analyses give each row its own
// seed, derived deterministically from the user seed and the row index,
// so rows never share draw sequences yet the whole report replays from
// one seed.
inline std::uint64_t derived_seed(std::uint64_t seed, std::size_t index) {
    RngStream stream(seed, index);
    return stream.next();
}

inline void deliver(const Json& report, const std::string& out_path) {
    if (out_path.empty())
        std::cout << report.dump(2) << '\n';
    else
        write_json_report(out_path, report);
}

inline TestResult run_pair_test(const Matrix& x, const Matrix& y, const Matrix& z,
                                TestMethod method, const CorrelationSpec& spec,
                                std::size_t resamples, std::uint64_t seed, TiePolicy tie_policy,
                                BootMethod paired_boot_method, unsigned threads) {
    switch (method) {
    case TestMethod::williams:
        return williams_from_matrices(x, y, z, spec);
    case TestMethod::paired_boot:
        return paired_bootstrap_test(x, y, z, paired_boot_method, spec, resamples, seed, threads);
    default:
        return permutation_test(x, y, z, perm_method_of(method), spec, resamples, seed, tie_policy,
                                threads);
    }
}

namespace detail {

struct DataArgs {
    std::string input;
    std::string format = "auto";
    MissingPolicy missing = MissingPolicy::strict;
    std::string truth;
    std::vector<std::string> metrics; // empty: every metric in the file except truth
};

struct LoadedData {
    ScoreSet set;
    std::vector<std::string> metrics;
    ScoreFormat format = ScoreFormat::jsonl;
};

inline LoadedData load(const DataArgs& args) {
    LoadedData data;
    data.format = resolve_format(args.input, args.format);
    const auto records = read_score_file(args.input, data.format);
    data.metrics = args.metrics;
    if (data.metrics.empty()) {
        data.metrics = all_metric_names(records);
        std::erase(data.metrics, args.truth);
    }
    if (data.metrics.empty())
        throw data_error("no metrics to analyze besides the ground truth");
    auto wanted = data.metrics;
    wanted.push_back(args.truth);
    data.set = build_score_set(records, wanted, args.missing);
    return data;
}

inline Json data_config(const DataArgs& args, const LoadedData& data) {
    Json j;
    j["input"] = args.input;
    j["format"] = to_string(data.format);
    j["missing"] = to_string(args.missing);
    j["truth"] = args.truth;
    j["metrics"] = data.metrics;
    j["systems"] = data.set.systems.size();
    j["inputs"] = data.set.inputs.size();
    return j;
}

struct WorldArgs {
    SyntheticWorld world;
    DataArgs data; // used instead of the synthetic world when input is set
};

struct SimData {
    Matrix x, z;
    Json config;
};

inline SimData sim_source(const WorldArgs& args) {
    SimData out;
    if (!args.data.input.empty()) {
        if (args.data.metrics.size() != 1)
            throw domain_error("pass exactly one --metric to simulate on file data");
        auto loaded = load(args.data);
        out.x = loaded.set.matrix(loaded.metrics[0]);
        out.z = loaded.set.matrix(args.data.truth);
        out.config["data"] = data_config(args.data, loaded);
    } else {
        auto [xm, zm] = generate_world(args.world);
        out.x = std::move(xm.values);
        out.z = std::move(zm.values);
        Json w;
        w["systems"] = args.world.systems;
        w["inputs"] = args.world.inputs;
        w["system_sd"] = args.world.system_sd;
        w["input_sd"] = args.world.input_sd;
        w["noise_sd"] = args.world.noise_sd;
        w["lambda"] = args.world.lambda;
        w["seed"] = args.world.seed;
        out.config["world"] = std::move(w);
    }
    return out;
}

inline Json report_shell(const char* command) {
    Json j;
    j["tool"] = tool_name;
    j["version"] = tool_version;
    j["command"] = command;
    return j;
}

inline void add_data_options(CLI::App* sub, DataArgs& args, bool required = true) {
    auto* input = sub->add_option("--input", args.input, "score file (JSONL or CSV)");
    if (required)
        input->required();
    sub->add_option("--format", args.format, "input format")
        ->check(CLI::IsMember({"auto", "jsonl", "csv"}))
        ->default_str("auto");
    static const std::map<std::string, MissingPolicy> missing_map{
        {"strict", MissingPolicy::strict}, {"drop-incomplete", MissingPolicy::drop_incomplete}};
    sub->add_option("--missing", args.missing, "how to treat incomplete score matrices")
        ->transform(CLI::CheckedTransformer(missing_map, CLI::ignore_case));
    auto* truth = sub->add_option("--truth", args.truth, "ground-truth metric name");
    if (required)
        truth->required();
}

inline const std::map<std::string, Level>& level_map() {
    static const std::map<std::string, Level> map{{"sys", Level::system}, {"sum", Level::summary}};
    return map;
}

inline const std::map<std::string, Coefficient>& coef_map() {
    static const std::map<std::string, Coefficient> map{{"pearson", Coefficient::pearson},
                                                        {"spearman", Coefficient::spearman},
                                                        {"kendall", Coefficient::kendall}};
    return map;
}

inline const std::map<std::string, CiMethod>& ci_method_map() {
    static const std::map<std::string, CiMethod> map{{"fisher", CiMethod::fisher},
                                                     {"boot-systems", CiMethod::boot_systems},
                                                     {"boot-inputs", CiMethod::boot_inputs},
                                                     {"boot-both", CiMethod::boot_both}};
    return map;
}

inline const std::map<std::string, TestMethod>& test_map() {
    static const std::map<std::string, TestMethod> map{{"williams", TestMethod::williams},
                                                       {"perm-systems", TestMethod::perm_systems},
                                                       {"perm-inputs", TestMethod::perm_inputs},
                                                       {"perm-both", TestMethod::perm_both},
                                                       {"paired-boot", TestMethod::paired_boot}};
    return map;
}

inline const std::map<std::string, TiePolicy>& tie_map() {
    static const std::map<std::string, TiePolicy> map{{"strict", TiePolicy::strict},
                                                      {"inclusive", TiePolicy::inclusive}};
    return map;
}

inline const std::map<std::string, BootMethod>& boot_map() {
    static const std::map<std::string, BootMethod> map{{"systems", BootMethod::systems},
                                                       {"inputs", BootMethod::inputs},
                                                       {"both", BootMethod::both}};
    return map;
}

inline void add_spec_options(CLI::App* sub, Level& level, Coefficient& coef) {
    sub->add_option("--level", level, "correlation level")
        ->transform(CLI::CheckedTransformer(level_map(), CLI::ignore_case));
    sub->add_option("--coef", coef, "correlation coefficient")
        ->transform(CLI::CheckedTransformer(coef_map(), CLI::ignore_case));
}

inline void add_world_options(CLI::App* sub, WorldArgs& args) {
    std::vector<CLI::Option*> world_opts{
        sub->add_option("--systems", args.world.systems, "synthetic world: number of systems"),
        sub->add_option("--inputs", args.world.inputs, "synthetic world: number of inputs"),
        sub->add_option("--system-sd", args.world.system_sd, "synthetic world: system effect stdev"),
        sub->add_option("--input-sd", args.world.input_sd, "synthetic world: input effect stdev"),
        sub->add_option("--noise-sd", args.world.noise_sd, "synthetic world: noise stdev"),
        sub->add_option("--lambda", args.world.lambda, "synthetic world: metric-truth mixing weight"),
        sub->add_option("--world-seed", args.world.seed, "synthetic world: generation seed"),
    };
    add_data_options(sub, args.data, false);
    sub->add_option("--metric", args.data.metrics, "metric column to analyze (file data only)");
    auto* input = sub->get_option("--input");
    for (auto* opt : world_opts)
        input->excludes(opt);
}

} // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"how well automatic evaluation metrics agree with human judgments"};
    app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);
    app.require_subcommand(1);

    using detail::add_data_options;
    using detail::add_spec_options;
    using detail::add_world_options;
    using detail::boot_map;
    using detail::ci_method_map;
    using detail::data_config;
    using detail::level_map;
    using detail::load;
    using detail::report_shell;
    using detail::sim_source;
    using detail::test_map;
    using detail::tie_map;

    // corr: every level and coefficient for each metric against the truth
    struct {
        detail::DataArgs data;
        std::string out;
    } corr;
    {
        auto* sub = app.add_subcommand("corr", "correlations of each metric with the ground truth");
        add_data_options(sub, corr.data);
        sub->add_option("--metric", corr.data.metrics, "metrics to include (default: all)");
        sub->add_option("--out", corr.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            const auto data = load(corr.data);
            const Matrix& z = data.set.matrix(corr.data.truth);
            Json rows = Json::array();
            for (const auto& name : data.metrics) {
                const Matrix& x = data.set.matrix(name);
                for (Level level : {Level::system, Level::summary})
                    for (Coefficient coef : {Coefficient::pearson, Coefficient::spearman,
                                             Coefficient::kendall}) {
                        Json row;
                        row["metric"] = name;
                        row.update(json_of(correlation(x, z, {level, coef})));
                        rows.push_back(std::move(row));
                    }
            }
            Json report = report_shell("corr");
            report["config"] = data_config(corr.data, data);
            report["correlations"] = std::move(rows);
            deliver(report, corr.out);
        });
    }

    // ci: one confidence interval row per metric
    struct {
        detail::DataArgs data;
        Level level = Level::system;
        Coefficient coef = Coefficient::pearson;
        CiMethod method = CiMethod::fisher;
        double alpha = 0.05;
        std::size_t resamples = 1000;
        std::uint64_t seed = 0;
        unsigned threads = 1;
        std::string out;
    } ci;
    {
        auto* sub = app.add_subcommand("ci", "confidence intervals for metric-truth correlations");
        add_data_options(sub, ci.data);
        sub->add_option("--metric", ci.data.metrics, "metrics to include (default: all)");
        add_spec_options(sub, ci.level, ci.coef);
        sub->add_option("--ci-method", ci.method, "interval construction")
            ->transform(CLI::CheckedTransformer(ci_method_map(), CLI::ignore_case));
        sub->add_option("--alpha", ci.alpha, "significance level");
        sub->add_option("--resamples", ci.resamples, "bootstrap resamples");
        sub->add_option("--seed", ci.seed, "PRNG seed")->envname("METRICCONF_SEED");
        sub->add_option("--threads", ci.threads, "worker threads");
        sub->add_option("--out", ci.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            const auto data = load(ci.data);
            const Matrix& z = data.set.matrix(ci.data.truth);
            const CorrelationSpec spec{ci.level, ci.coef};
            Json rows = Json::array();
            for (std::size_t m = 0; m < data.metrics.size(); ++m) {
                const Matrix& x = data.set.matrix(data.metrics[m]);
                ConfidenceInterval interval;
                if (ci.method == CiMethod::fisher) {
                    const auto r = correlation(x, z, spec).value;
                    if (!r)
                        throw data_error("correlation of " + data.metrics[m] +
                                         " with the truth is undefined");
                    interval = fisher_ci(*r, data.set.systems.size(), ci.coef, ci.alpha, ci.level);
                } else {
                    interval = bootstrap_ci(x, z, boot_method_of(ci.method), spec, ci.resamples,
                                            ci.alpha, derived_seed(ci.seed, m), ci.threads);
                }
                Json row;
                row["metric"] = data.metrics[m];
                row["level"] = metricconf::to_string(ci.level);
                row["coefficient"] = metricconf::to_string(ci.coef);
                row.update(json_of(interval));
                rows.push_back(std::move(row));
            }
            Json report = report_shell("ci");
            report["config"] = data_config(ci.data, data);
            report["config"]["level"] = metricconf::to_string(ci.level);
            report["config"]["coefficient"] = metricconf::to_string(ci.coef);
            report["config"]["ci_method"] = metricconf::to_string(ci.method);
            report["config"]["alpha"] = ci.alpha;
            report["config"]["resamples"] = ci.resamples;
            report["config"]["seed"] = ci.seed;
            report["intervals"] = std::move(rows);
            deliver(report, ci.out);
        });
    }

    // test: one-tailed comparison of two metrics
    struct {
        detail::DataArgs data;
        std::string metric_x, metric_y;
        Level level = Level::system;
        Coefficient coef = Coefficient::pearson;
        TestMethod method = TestMethod::perm_both;
        double alpha = 0.05;
        std::size_t resamples = 1000;
        std::uint64_t seed = 0;
        TiePolicy tie_policy = TiePolicy::strict;
        BootMethod boot_method = BootMethod::both;
        unsigned threads = 1;
        std::string out;
    } test;
    {
        auto* sub = app.add_subcommand("test", "significance test: does metric X beat metric Y?");
        add_data_options(sub, test.data);
        sub->add_option("-x,--metric-x", test.metric_x, "candidate metric")->required();
        sub->add_option("-y,--metric-y", test.metric_y, "baseline metric")->required();
        add_spec_options(sub, test.level, test.coef);
        sub->add_option("--test", test.method, "test method")
            ->transform(CLI::CheckedTransformer(test_map(), CLI::ignore_case));
        sub->add_option("--alpha", test.alpha, "significance level");
        sub->add_option("--resamples", test.resamples, "permutation or bootstrap resamples");
        sub->add_option("--seed", test.seed, "PRNG seed")->envname("METRICCONF_SEED");
        sub->add_option("--tie-policy", test.tie_policy, "how permuted deltas tying the observed delta count")
            ->transform(CLI::CheckedTransformer(tie_map(), CLI::ignore_case));
        sub->add_option("--boot-method", test.boot_method, "resampling axes for paired-boot")
            ->transform(CLI::CheckedTransformer(boot_map(), CLI::ignore_case));
        sub->add_option("--threads", test.threads, "worker threads");
        sub->add_option("--out", test.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            test.data.metrics = {test.metric_x, test.metric_y};
            if (test.metric_x == test.metric_y)
                test.data.metrics = {test.metric_x};
            const auto data = load(test.data);
            const CorrelationSpec spec{test.level, test.coef};
            const TestResult result = run_pair_test(
                data.set.matrix(test.metric_x), data.set.matrix(test.metric_y),
                data.set.matrix(test.data.truth), test.method, spec, test.resamples, test.seed,
                test.tie_policy, test.boot_method, test.threads);

            Json section;
            section["metric_x"] = test.metric_x;
            section["metric_y"] = test.metric_y;
            section.update(json_of(result));
            section["significant"] = result.p_value < test.alpha;
            Json warnings = Json::array();
            if (result.tie_policy == TiePolicy::strict && result.tied_resamples > 0)
                warnings.push_back(std::to_string(result.tied_resamples) +
                                   " resampled deltas tied the observed delta exactly and were "
                                   "counted as non-exceeding; consider --tie-policy inclusive");
            section["warnings"] = std::move(warnings);

            Json report = report_shell("test");
            report["config"] = data_config(test.data, data);
            report["config"]["level"] = metricconf::to_string(test.level);
            report["config"]["coefficient"] = metricconf::to_string(test.coef);
            report["config"]["test"] = metricconf::to_string(test.method);
            report["config"]["alpha"] = test.alpha;
            report["config"]["resamples"] = test.resamples;
            report["config"]["seed"] = test.seed;
            report["config"]["tie_policy"] = metricconf::to_string(test.tie_policy);
            report["config"]["boot_method"] = metricconf::to_string(test.boot_method);
            report["test"] = std::move(section);
            deliver(report, test.out);
        });
    }

    // compare: full pairwise test matrix with Bonferroni correction
    struct {
        detail::DataArgs data;
        Level level = Level::system;
        Coefficient coef = Coefficient::pearson;
        TestMethod method = TestMethod::perm_both;
        double alpha = 0.05;
        std::size_t resamples = 1000;
        std::uint64_t seed = 0;
        TiePolicy tie_policy = TiePolicy::strict;
        BootMethod boot_method = BootMethod::both;
        std::string correct_by = "metric";
        unsigned threads = 1;
        std::string out;
    } compare;
    {
        auto* sub = app.add_subcommand("compare", "pairwise significance matrix over many metrics");
        add_data_options(sub, compare.data);
        sub->add_option("--metric", compare.data.metrics, "metrics to compare (default: all)");
        add_spec_options(sub, compare.level, compare.coef);
        sub->add_option("--test", compare.method, "test method")
            ->transform(CLI::CheckedTransformer(test_map(), CLI::ignore_case));
        sub->add_option("--alpha", compare.alpha, "significance level");
        sub->add_option("--resamples", compare.resamples, "permutation or bootstrap resamples");
        sub->add_option("--seed", compare.seed, "PRNG seed")->envname("METRICCONF_SEED");
        sub->add_option("--tie-policy", compare.tie_policy, "how ties against the observed delta count")
            ->transform(CLI::CheckedTransformer(tie_map(), CLI::ignore_case));
        sub->add_option("--boot-method", compare.boot_method, "resampling axes for paired-boot")
            ->transform(CLI::CheckedTransformer(boot_map(), CLI::ignore_case));
        sub->add_option("--correct-by", compare.correct_by, "Bonferroni grouping")
            ->check(CLI::IsMember({"metric", "dataset-level"}));
        sub->add_option("--threads", compare.threads, "worker threads");
        sub->add_option("--out", compare.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            const auto data = load(compare.data);
            const auto& metrics = data.metrics;
            const std::size_t q = metrics.size();
            if (q < 2)
                throw data_error("compare needs at least two metrics");
            const Matrix& z = data.set.matrix(compare.data.truth);
            const CorrelationSpec spec{compare.level, compare.coef};

            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t j = 0; j < q; ++j)
                    if (i != j)
                        pairs.emplace_back(i, j);

            std::vector<double> p_values(pairs.size());
            std::vector<double> deltas(pairs.size());
            Json tests = Json::array();
            for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
                const auto [i, j] = pairs[idx];
                const TestResult result = run_pair_test(
                    data.set.matrix(metrics[i]), data.set.matrix(metrics[j]), z, compare.method,
                    spec, compare.resamples, derived_seed(compare.seed, i * q + j),
                    compare.tie_policy, compare.boot_method, compare.threads);
                p_values[idx] = result.p_value;
                deltas[idx] = result.delta;
                Json row;
                row["metric_x"] = metrics[i];
                row["metric_y"] = metrics[j];
                row.update(json_of(result));
                tests.push_back(std::move(row));
            }

            std::vector<std::vector<std::size_t>> groups;
            if (compare.correct_by == "metric") {
                for (std::size_t i = 0; i < q; ++i) {
                    std::vector<std::size_t> group(q - 1);
                    std::iota(group.begin(), group.end(), i * (q - 1));
                    groups.push_back(std::move(group));
                }
            } else {
                std::vector<std::size_t> group(pairs.size());
                std::iota(group.begin(), group.end(), std::size_t{0});
                groups.push_back(std::move(group));
            }
            const auto flags = bonferroni_reject(p_values, compare.alpha, groups);

            const Json null_row = Json::array();
            Json p_matrix = Json::array(), delta_matrix = Json::array();
            Json raw = Json::array(), corrected = Json::array();
            for (std::size_t i = 0; i < q; ++i) {
                Json pr = Json::array(), dr = Json::array(), rr = Json::array(), cr = Json::array();
                for (std::size_t j = 0; j < q; ++j) {
                    if (i == j) {
                        pr.push_back(nullptr);
                        dr.push_back(nullptr);
                        rr.push_back(false);
                        cr.push_back(false);
                        continue;
                    }
                    const std::size_t idx = i * (q - 1) + (j > i ? j - 1 : j);
                    pr.push_back(p_values[idx]);
                    dr.push_back(deltas[idx]);
                    rr.push_back(flags[idx].raw);
                    cr.push_back(flags[idx].corrected);
                }
                p_matrix.push_back(std::move(pr));
                delta_matrix.push_back(std::move(dr));
                raw.push_back(std::move(rr));
                corrected.push_back(std::move(cr));
            }

            Json section;
            section["metrics"] = metrics;
            section["level"] = metricconf::to_string(compare.level);
            section["coefficient"] = metricconf::to_string(compare.coef);
            section["test"] = metricconf::to_string(compare.method);
            section["alpha"] = compare.alpha;
            section["correct_by"] = compare.correct_by;
            section["correction_group_size"] =
                compare.correct_by == "metric" ? q - 1 : pairs.size();
            section["p_values"] = std::move(p_matrix);
            section["deltas"] = std::move(delta_matrix);
            section["raw_significant"] = std::move(raw);
            section["corrected_significant"] = std::move(corrected);
            section["tests"] = std::move(tests);

            Json report = report_shell("compare");
            report["config"] = data_config(compare.data, data);
            report["config"]["level"] = metricconf::to_string(compare.level);
            report["config"]["coefficient"] = metricconf::to_string(compare.coef);
            report["config"]["test"] = metricconf::to_string(compare.method);
            report["config"]["alpha"] = compare.alpha;
            report["config"]["resamples"] = compare.resamples;
            report["config"]["seed"] = compare.seed;
            report["config"]["tie_policy"] = metricconf::to_string(compare.tie_policy);
            report["config"]["boot_method"] = metricconf::to_string(compare.boot_method);
            report["config"]["correct_by"] = compare.correct_by;
            report["pairwise"] = std::move(section);
            deliver(report, compare.out);
        });
    }

    // sim-coverage: CI coverage meta-experiment
    struct {
        detail::WorldArgs source;
        Level level = Level::system;
        Coefficient coef = Coefficient::pearson;
        CiMethod method = CiMethod::boot_both;
        double alpha = 0.05;
        std::size_t resamples = 1000;
        std::size_t trials = 1000;
        std::uint64_t seed = 0;
        unsigned threads = 1;
        std::string out;
    } cov;
    {
        auto* sub = app.add_subcommand("sim-coverage",
                                       "how often CIs built on half the data cover the other half");
        add_world_options(sub, cov.source);
        add_spec_options(sub, cov.level, cov.coef);
        sub->add_option("--ci-method", cov.method, "interval construction")
            ->transform(CLI::CheckedTransformer(ci_method_map(), CLI::ignore_case));
        sub->add_option("--alpha", cov.alpha, "significance level");
        sub->add_option("--resamples", cov.resamples, "bootstrap resamples per trial");
        sub->add_option("--trials", cov.trials, "number of split trials");
        sub->add_option("--seed", cov.seed, "PRNG seed")->envname("METRICCONF_SEED");
        sub->add_option("--threads", cov.threads, "worker threads");
        sub->add_option("--out", cov.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            auto source = sim_source(cov.source);
            const CorrelationSpec spec{cov.level, cov.coef};
            const CoverageReport result =
                coverage_simulation(source.x, source.z, cov.method, spec, cov.trials, cov.alpha,
                                    cov.resamples, cov.seed, cov.threads);
            Json report = report_shell("sim-coverage");
            report["config"] = std::move(source.config);
            report["config"]["level"] = metricconf::to_string(cov.level);
            report["config"]["coefficient"] = metricconf::to_string(cov.coef);
            report["config"]["ci_method"] = metricconf::to_string(cov.method);
            report["config"]["alpha"] = cov.alpha;
            report["config"]["resamples"] = cov.resamples;
            report["config"]["trials"] = cov.trials;
            report["config"]["seed"] = cov.seed;
            report["coverage"] = json_of(result);
            deliver(report, cov.out);
        });
    }

    // sim-power: test power across metric degradation levels
    struct {
        detail::WorldArgs source;
        Level level = Level::system;
        Coefficient coef = Coefficient::pearson;
        std::vector<TestMethod> methods;
        std::vector<double> k_percent;
        double alpha = 0.05;
        std::size_t resamples = 1000;
        std::size_t trials = 500;
        std::uint64_t seed = 0;
        TiePolicy tie_policy = TiePolicy::inclusive;
        BootMethod boot_method = BootMethod::both;
        unsigned threads = 1;
        std::string out;
    } pow;
    {
        auto* sub = app.add_subcommand("sim-power",
                                       "test power against increasingly degraded metrics");
        add_world_options(sub, pow.source);
        add_spec_options(sub, pow.level, pow.coef);
        sub->add_option("--test", pow.methods, "test methods (repeatable)")
            ->transform(CLI::CheckedTransformer(test_map(), CLI::ignore_case));
        sub->add_option("--k", pow.k_percent, "degradation levels in percent")->delimiter(',');
        sub->add_option("--alpha", pow.alpha, "significance level");
        sub->add_option("--resamples", pow.resamples, "resamples per test");
        sub->add_option("--trials", pow.trials, "trials per degradation level");
        sub->add_option("--seed", pow.seed, "PRNG seed")->envname("METRICCONF_SEED");
        sub->add_option("--tie-policy", pow.tie_policy, "tie handling inside permutation tests")
            ->transform(CLI::CheckedTransformer(tie_map(), CLI::ignore_case));
        sub->add_option("--boot-method", pow.boot_method, "resampling axes for paired-boot")
            ->transform(CLI::CheckedTransformer(boot_map(), CLI::ignore_case));
        sub->add_option("--threads", pow.threads, "worker threads");
        sub->add_option("--out", pow.out, "write the JSON report here instead of stdout");
        sub->callback([&] {
            if (pow.methods.empty())
                pow.methods = {TestMethod::perm_both};
            if (pow.k_percent.empty())
                pow.k_percent = {0.0, 25.0, 50.0, 75.0, 100.0};
            auto source = sim_source(pow.source);
            const CorrelationSpec spec{pow.level, pow.coef};
            Json curves = Json::array();
            for (std::size_t m = 0; m < pow.methods.size(); ++m) {
                const PowerCurve curve = power_simulation(
                    source.x, source.z, pow.k_percent, pow.methods[m], spec, pow.trials, pow.alpha,
                    pow.resamples, derived_seed(pow.seed, m), pow.threads, pow.tie_policy,
                    pow.boot_method);
                curves.push_back(json_of(curve));
            }
            Json report = report_shell("sim-power");
            report["config"] = std::move(source.config);
            report["config"]["level"] = metricconf::to_string(pow.level);
            report["config"]["coefficient"] = metricconf::to_string(pow.coef);
            Json names = Json::array();
            for (TestMethod m : pow.methods)
                names.push_back(metricconf::to_string(m));
            report["config"]["tests"] = std::move(names);
            report["config"]["k_percent"] = pow.k_percent;
            report["config"]["alpha"] = pow.alpha;
            report["config"]["resamples"] = pow.resamples;
            report["config"]["trials"] = pow.trials;
            report["config"]["seed"] = pow.seed;
            report["config"]["tie_policy"] = metricconf::to_string(pow.tie_policy);
            report["config"]["boot_method"] = metricconf::to_string(pow.boot_method);
            report["power"]["curves"] = std::move(curves);
            deliver(report, pow.out);
        });
    }

    // plot: flat CSV (and optional SVG) from a saved report
    struct {
        std::string report_path;
        PlotKind kind = PlotKind::forest;
        std::string out;
        std::string svg;
    } plot;
    {
        auto* sub = app.add_subcommand("plot", "derive plot data from a saved JSON report");
        sub->add_option("--report", plot.report_path, "report JSON produced by another command")
            ->required();
        static const std::map<std::string, PlotKind> kind_map{
            {"forest", PlotKind::forest},
            {"pairwise", PlotKind::pairwise},
            {"power-curve", PlotKind::power_curve}};
        sub->add_option("--kind", plot.kind, "plot data kind")
            ->required()
            ->transform(CLI::CheckedTransformer(kind_map, CLI::ignore_case));
        sub->add_option("--out", plot.out, "CSV output path")->required();
        sub->add_option("--svg", plot.svg, "also render a static SVG (forest only)");
        sub->callback([&] {
            if (!plot.svg.empty() && plot.kind != PlotKind::forest)
                throw domain_error("--svg is only available for the forest plot");
            std::ifstream in(plot.report_path, std::ios::binary);
            if (!in)
                throw data_error("cannot open " + plot.report_path);
            Json report;
            try {
                report = Json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw data_error(plot.report_path + " is not valid JSON: " + e.what());
            }
            emit_plot_data(report, plot.kind, plot.out);
            if (!plot.svg.empty())
                write_text_file(plot.svg,
                                render_forest_svg(metricconf::detail::report_section(report, "intervals")));
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace metricconf::cli
