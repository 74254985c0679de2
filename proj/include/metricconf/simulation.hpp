#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metricconf/confidence.hpp"
#include "metricconf/correlation.hpp"
#include "metricconf/distributions.hpp"
#include "metricconf/error.hpp"
#include "metricconf/matrix.hpp"
#include "metricconf/parallel.hpp"
#include "metricconf/rng.hpp"
#include "metricconf/scores.hpp"
#include "metricconf/significance.hpp"

namespace metricconf {

namespace detail {

inline double gaussian(RngStream& stream) {
    return normal_quantile(uniform_open01(stream));
}

inline std::string padded_label(const char* prefix, std::size_t index, std::size_t count) {
    std::size_t width = 2;
    for (std::size_t v = count > 0 ? count - 1 : 0; v >= 100; v /= 10)
        ++width;
    std::string digits = std::to_string(index);
    if (digits.size() < width)
        digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

inline double population_sd(const Matrix& m) {
    double mean = 0.0;
    for (double v : m.flat())
        mean += v;
    mean /= static_cast<double>(m.size());
    double var = 0.0;
    for (double v : m.flat())
        var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(m.size()));
}

} // namespace detail

// Synthetic score generator. The ground truth decomposes into additive
// system and input effects plus noise,
//   z_ij = s_i + d_j + eps_ij,
// and the metric mixes truth with fresh noise,
//   x_ij = lambda * z_ij + (1 - lambda) * eps'_ij,
// so lambda controls how informative the metric is.
struct SyntheticWorld {
    std::size_t systems = 8;
    std::size_t inputs = 8;
    double system_sd = 1.0; // stdev of per-system effects s_i
    double input_sd = 1.0;  // stdev of per-input effects d_j
    double noise_sd = 1.0;  // stdev of eps and eps'
    double lambda = 0.9;    // metric-truth mixing weight in [0, 1]
    std::uint64_t seed = 0;
};

// Gaussian draws come from stream (seed, 0) in a fixed order (system
// effects, input effects, truth noise row-major, metric noise row-major),
// so a world is fully determined by its config.
inline std::pair<ScoreMatrix, ScoreMatrix> generate_world(const SyntheticWorld& w) {
    if (w.systems < 4 || w.inputs < 2)
        throw domain_error("generate_world: need at least 4 systems and 2 inputs");
    if (w.system_sd < 0.0 || w.input_sd < 0.0 || w.noise_sd < 0.0)
        throw domain_error("generate_world: stdevs must be non-negative");
    if (!(w.lambda >= 0.0 && w.lambda <= 1.0))
        throw domain_error("generate_world: lambda must lie in [0, 1]");

    RngStream stream(w.seed, 0);
    std::vector<double> sys_effect(w.systems), input_effect(w.inputs);
    for (auto& s : sys_effect)
        s = detail::gaussian(stream) * w.system_sd;
    for (auto& d : input_effect)
        d = detail::gaussian(stream) * w.input_sd;

    Matrix truth(w.systems, w.inputs), metric(w.systems, w.inputs);
    for (std::size_t i = 0; i < w.systems; ++i)
        for (std::size_t j = 0; j < w.inputs; ++j)
            truth(i, j) = sys_effect[i] + input_effect[j] + detail::gaussian(stream) * w.noise_sd;
    for (std::size_t i = 0; i < w.systems; ++i)
        for (std::size_t j = 0; j < w.inputs; ++j)
            metric(i, j) = w.lambda * truth(i, j) + (1.0 - w.lambda) * detail::gaussian(stream) * w.noise_sd;

    std::vector<std::string> systems(w.systems), inputs(w.inputs);
    for (std::size_t i = 0; i < w.systems; ++i)
        systems[i] = detail::padded_label("sys", i, w.systems);
    for (std::size_t j = 0; j < w.inputs; ++j)
        inputs[j] = detail::padded_label("doc", j, w.inputs);

    ScoreMatrix x{"metric", systems, inputs, std::move(metric)};
    ScoreMatrix z{"human", systems, inputs, std::move(truth)};
    return {std::move(x), std::move(z)};
}

// A half/half partition of both axes. When an axis has odd length the A
// side gets the smaller half.
struct SplitPlan {
    std::vector<std::size_t> systems_a, systems_b;
    std::vector<std::size_t> inputs_a, inputs_b;
};

namespace detail {

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_axis(std::size_t n,
                                                                                RngStream& stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[uniform_index(stream, i + 1)]);
    std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n / 2));
    std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n / 2), order.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {std::move(a), std::move(b)};
}

} // namespace detail

inline SplitPlan draw_split(std::size_t systems, std::size_t inputs, RngStream& stream) {
    if (systems < 2 || inputs < 2)
        throw domain_error("draw_split: need at least 2 systems and 2 inputs");
    SplitPlan plan;
    std::tie(plan.systems_a, plan.systems_b) = detail::split_axis(systems, stream);
    std::tie(plan.inputs_a, plan.inputs_b) = detail::split_axis(inputs, stream);
    return plan;
}

inline Matrix submatrix(const Matrix& m, const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& cols) {
    return apply_boot_indices(m, BootIndices{rows, cols});
}

struct CoverageRecord {
    ConfidenceInterval ci;
    double held_out_r = 0.0;
    bool contained = false;
    std::size_t retries = 0; // redraws this trial needed before both halves were usable
};

struct CoverageReport {
    std::size_t trials = 0;
    std::size_t contained = 0;
    std::size_t total_retries = 0;
    double proportion = 0.0;
    std::vector<CoverageRecord> records;
};

// Builds a CI from the A-half matrices; seed is the trial-local seed for
// any resampling the builder does.
using CiBuilder = std::function<ConfidenceInterval(const Matrix& x_a, const Matrix& z_a,
                                                   std::uint64_t seed)>;

// Coverage meta-experiment: each trial splits systems and inputs in half,
// builds a CI on the A half, and checks whether it contains the sample
// correlation of the held-out B half. A trial whose B-half correlation is
// undefined, or whose CI construction degenerates, redraws its split (at
// most 10 times) so the proportion is over usable trials only. Trial t
// consumes only stream (seed, t), so trials parallelize deterministically.
inline CoverageReport coverage_simulation(const Matrix& x, const Matrix& z, const CiBuilder& build_ci,
                                          const CorrelationSpec& spec, std::size_t trials,
                                          std::uint64_t seed, unsigned threads = 1) {
    require_aligned(x, z, "coverage_simulation");
    if (x.rows() < 4 || x.cols() < 2)
        throw domain_error("coverage_simulation: need at least 4 systems and 2 inputs");
    if (trials == 0)
        throw domain_error("coverage_simulation: need at least 1 trial");

    constexpr std::size_t max_retries = 10;
    std::vector<CoverageRecord> records(trials);
    std::vector<std::string> failures(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream stream(seed, t);
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt > max_retries) {
                failures[t] = "coverage_simulation: trial " + std::to_string(t) +
                              " exhausted its retry budget";
                return;
            }
            const SplitPlan plan = draw_split(x.rows(), x.cols(), stream);
            const std::uint64_t ci_seed = stream.next();
            const auto held =
                correlation(submatrix(x, plan.systems_b, plan.inputs_b),
                            submatrix(z, plan.systems_b, plan.inputs_b), spec).value;
            if (!held)
                continue;
            CoverageRecord rec;
            try {
                rec.ci = build_ci(submatrix(x, plan.systems_a, plan.inputs_a),
                                  submatrix(z, plan.systems_a, plan.inputs_a), ci_seed);
            } catch (const domain_error&) {
                continue;
            }
            rec.held_out_r = *held;
            rec.contained = rec.ci.contains(*held);
            rec.retries = attempt;
            records[t] = std::move(rec);
            return;
        }
    });
    for (const auto& f : failures)
        if (!f.empty())
            throw domain_error(f);

    CoverageReport report;
    report.trials = trials;
    report.records = std::move(records);
    for (const auto& rec : report.records) {
        report.contained += rec.contained ? 1 : 0;
        report.total_retries += rec.retries;
    }
    report.proportion = static_cast<double>(report.contained) / static_cast<double>(trials);
    return report;
}

inline CoverageReport coverage_simulation(const Matrix& x, const Matrix& z, CiMethod method,
                                          const CorrelationSpec& spec, std::size_t trials,
                                          double alpha, std::size_t resamples, std::uint64_t seed,
                                          unsigned threads = 1) {
    CiBuilder build_ci;
    if (method == CiMethod::fisher || method == CiMethod::fisher_summary) {
        build_ci = [=](const Matrix& x_a, const Matrix& z_a, std::uint64_t) {
            const auto r = correlation(x_a, z_a, spec).value;
            if (!r)
                throw domain_error("coverage_simulation: A-half correlation undefined");
            return fisher_ci(*r, x_a.rows(), spec.coefficient, alpha, spec.level);
        };
    } else {
        const BootMethod boot = boot_method_of(method);
        build_ci = [=](const Matrix& x_a, const Matrix& z_a, std::uint64_t ci_seed) {
            return bootstrap_ci(x_a, z_a, boot, spec, resamples, alpha, ci_seed);
        };
    }
    return coverage_simulation(x, z, build_ci, spec, trials, seed, threads);
}

// One-tailed two-sample z-test for H1: c1/n1 > c2/n2, with pooled
// variance. A pooled proportion of exactly 0 or 1 leaves no variance; by
// convention p is then 0.5 on equality and 0 or 1 by the sign of the
// difference.
inline double proportions_z_test(std::size_t c1, std::size_t n1, std::size_t c2, std::size_t n2) {
    if (n1 == 0 || n2 == 0)
        throw domain_error("proportions_z_test: sample sizes must be positive");
    if (c1 > n1 || c2 > n2)
        throw domain_error("proportions_z_test: counts cannot exceed sample sizes");
    const double p1 = static_cast<double>(c1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(c2) / static_cast<double>(n2);
    const double pooled = static_cast<double>(c1 + c2) / static_cast<double>(n1 + n2);
    const double variance =
        pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
    if (variance == 0.0)
        return p1 == p2 ? 0.5 : (p1 > p2 ? 0.0 : 1.0);
    return normal_sf((p1 - p2) / std::sqrt(variance));
}

struct PowerCurve {
    std::vector<double> k_percent;       // degradation levels
    std::vector<double> power;           // rejection proportion per level
    std::vector<std::size_t> rejections; // rejection count per level
    std::size_t trials = 0;
    TestMethod method = TestMethod::perm_both;
    double alpha = 0.05;
    std::size_t resamples = 0;
    std::uint64_t seed = 0;
    TiePolicy tie_policy = TiePolicy::inclusive;
};

// Power meta-experiment: per degradation level k and trial, a weakened
// metric Y = (k/100) * X + (1 - k/100) * noise is drawn (noise is fresh
// Gaussian per cell, scaled to sd(X)) and the chosen one-tailed test of
// "X beats Y" runs at the given alpha. Power per level is the rejection
// proportion. Trial (l, t) consumes only stream (seed, l * trials + t).
//
// The inclusive tie policy is the default here: at k = 100% the metrics
// are identical, every permuted delta ties the observed zero, and only
// the inclusive count keeps the test from rejecting a true null. Williams
// on identical metrics is reported as p = 0.5 for the same reason.
inline PowerCurve power_simulation(const Matrix& x_base, const Matrix& z,
                                   const std::vector<double>& k_percent, TestMethod method,
                                   const CorrelationSpec& spec, std::size_t trials, double alpha,
                                   std::size_t resamples, std::uint64_t seed, unsigned threads = 1,
                                   TiePolicy tie_policy = TiePolicy::inclusive,
                                   BootMethod paired_boot_method = BootMethod::both) {
    require_aligned(x_base, z, "power_simulation");
    if (k_percent.empty())
        throw domain_error("power_simulation: degradation schedule is empty");
    for (double k : k_percent)
        if (!(k >= 0.0 && k <= 100.0))
            throw domain_error("power_simulation: degradation levels must lie in [0, 100]");
    if (trials == 0)
        throw domain_error("power_simulation: need at least 1 trial");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("power_simulation: alpha must lie in (0, 1)");
    const double base_sd = detail::population_sd(x_base);
    if (base_sd == 0.0)
        throw domain_error("power_simulation: base metric is constant");

    const std::size_t levels = k_percent.size();
    std::vector<std::uint8_t> rejected(levels * trials, 0);
    parallel_for(levels * trials, threads, [&](std::size_t flat) {
        const double weight = k_percent[flat / trials] / 100.0;
        RngStream stream(seed, flat);
        Matrix y(x_base.rows(), x_base.cols());
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j)
                y(i, j) = weight * x_base(i, j) +
                          (1.0 - weight) * detail::gaussian(stream) * base_sd;
        const std::uint64_t test_seed = stream.next();

        double p;
        switch (method) {
        case TestMethod::williams:
            p = williams_from_matrices(x_base, y, z, spec).p_value;
            break;
        case TestMethod::paired_boot:
            p = paired_bootstrap_test(x_base, y, z, paired_boot_method, spec, resamples, test_seed)
                    .p_value;
            break;
        default:
            p = permutation_test(x_base, y, z, perm_method_of(method), spec, resamples, test_seed,
                                 tie_policy)
                    .p_value;
            break;
        }
        rejected[flat] = p < alpha ? 1 : 0;
    });

    PowerCurve curve;
    curve.k_percent = k_percent;
    curve.trials = trials;
    curve.method = method;
    curve.alpha = alpha;
    curve.resamples = resamples;
    curve.seed = seed;
    curve.tie_policy = tie_policy;
    curve.rejections.resize(levels, 0);
    curve.power.resize(levels, 0.0);
    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t t = 0; t < trials; ++t)
            curve.rejections[l] += rejected[l * trials + t];
        curve.power[l] = static_cast<double>(curve.rejections[l]) / static_cast<double>(trials);
    }
    return curve;
}

} // namespace metricconf
