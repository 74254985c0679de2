#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
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

namespace metricconf {

enum class PermMethod { systems, inputs, both };

// Counting rule for permuted deltas that exactly tie the observed delta.
// strict counts delta_s > delta (so fully tied data yields p = 0);
// inclusive counts delta_s >= delta.
enum class TiePolicy { strict, inclusive };

enum class TestMethod { williams, perm_systems, perm_inputs, perm_both, paired_boot };

inline const char* to_string(PermMethod m) {
    switch (m) {
    case PermMethod::systems: return "perm-systems";
    case PermMethod::inputs: return "perm-inputs";
    default: return "perm-both";
    }
}

inline const char* to_string(TestMethod m) {
    switch (m) {
    case TestMethod::williams: return "williams";
    case TestMethod::perm_systems: return "perm-systems";
    case TestMethod::perm_inputs: return "perm-inputs";
    case TestMethod::perm_both: return "perm-both";
    default: return "paired-boot";
    }
}

inline const char* to_string(TiePolicy p) {
    return p == TiePolicy::strict ? "strict" : "inclusive";
}

inline TestMethod test_method_of(PermMethod m) {
    switch (m) {
    case PermMethod::systems: return TestMethod::perm_systems;
    case PermMethod::inputs: return TestMethod::perm_inputs;
    default: return TestMethod::perm_both;
    }
}

inline PermMethod perm_method_of(TestMethod m) {
    switch (m) {
    case TestMethod::perm_systems: return PermMethod::systems;
    case TestMethod::perm_inputs: return PermMethod::inputs;
    case TestMethod::perm_both: return PermMethod::both;
    default: throw domain_error("perm_method_of: not a permutation method");
    }
}

// One-tailed test of H1: rho(X,Z) - rho(Y,Z) > 0.
struct TestResult {
    double p_value = 1.0;
    double delta = 0.0; // observed r(X,Z) - r(Y,Z)
    TestMethod method = TestMethod::williams;
    std::size_t resamples = 0;
    std::uint64_t seed = 0;
    TiePolicy tie_policy = TiePolicy::strict;
    std::size_t degenerate_resamples = 0;
    std::size_t tied_resamples = 0; // permuted deltas exactly equal to the observed delta
    bool experimental = false;      // summary-level Williams
};

// Centers and scales by the mean and population stdev of all N*M entries.
inline Matrix standardize(const Matrix& m) {
    if (m.size() == 0)
        throw domain_error("standardize: empty matrix");
    double mean = 0.0;
    for (double v : m.flat())
        mean += v;
    mean /= static_cast<double>(m.size());
    double var = 0.0;
    for (double v : m.flat())
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.size());
    if (var == 0.0)
        throw domain_error("standardize: matrix is constant");
    const double sd = std::sqrt(var);
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = (m(i, j) - mean) / sd;
    return out;
}

// One permutation resample: swaps entire rows, entire columns, or single
// cells between X and Y, one fair coin per unit. Coins are consumed in a
// fixed row-major order so a stream replays identically.
inline std::pair<Matrix, Matrix> perm_sample(const Matrix& x, const Matrix& y, PermMethod method,
                                             RngStream& stream) {
    require_aligned(x, y, "perm_sample");
    Matrix xs = x, ys = y;
    const auto swap_cell = [&](std::size_t i, std::size_t j) {
        xs(i, j) = y(i, j);
        ys(i, j) = x(i, j);
    };
    switch (method) {
    case PermMethod::systems:
        for (std::size_t i = 0; i < x.rows(); ++i)
            if (fair_coin(stream))
                for (std::size_t j = 0; j < x.cols(); ++j)
                    swap_cell(i, j);
        break;
    case PermMethod::inputs:
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (fair_coin(stream))
                for (std::size_t i = 0; i < x.rows(); ++i)
                    swap_cell(i, j);
        break;
    case PermMethod::both:
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                if (fair_coin(stream))
                    swap_cell(i, j);
        break;
    }
    return {std::move(xs), std::move(ys)};
}

// Permutation test: X and Y are standardized, the observed delta is
// r(X,Z) - r(Y,Z), and the null distribution is estimated by re-computing
// delta on k randomly swapped copies (iteration i on stream (seed, i)).
// Resamples with an undefined correlation are skipped and counted; the
// p-value is the qualifying fraction of the defined ones.
inline TestResult permutation_test(const Matrix& x, const Matrix& y, const Matrix& z,
                                   PermMethod method, const CorrelationSpec& spec,
                                   std::size_t resamples, std::uint64_t seed,
                                   TiePolicy tie_policy = TiePolicy::strict, unsigned threads = 1) {
    require_aligned(x, y, "permutation_test");
    require_aligned(x, z, "permutation_test");
    if (resamples < 100)
        throw domain_error("permutation_test: need at least 100 resamples");

    const Matrix xn = standardize(x);
    const Matrix yn = standardize(y);
    const auto r_xz = correlation(xn, z, spec).value;
    const auto r_yz = correlation(yn, z, spec).value;
    if (!r_xz || !r_yz)
        throw domain_error("permutation_test: observed correlation undefined");
    const double delta = *r_xz - *r_yz;

    std::vector<std::optional<double>> deltas(resamples);
    parallel_for(resamples, threads, [&](std::size_t i) {
        RngStream stream(seed, i);
        const auto [xs, ys] = perm_sample(xn, yn, method, stream);
        const auto rs_xz = correlation(xs, z, spec).value;
        const auto rs_yz = correlation(ys, z, spec).value;
        if (rs_xz && rs_yz)
            deltas[i] = *rs_xz - *rs_yz;
    });

    std::size_t defined = 0, above = 0, tied = 0;
    for (const auto& d : deltas) {
        if (!d)
            continue;
        ++defined;
        if (*d > delta)
            ++above;
        else if (*d == delta)
            ++tied;
    }
    if (defined == 0)
        throw domain_error("permutation_test: every resample produced an undefined correlation");

    TestResult result;
    result.delta = delta;
    result.method = test_method_of(method);
    result.resamples = resamples;
    result.seed = seed;
    result.tie_policy = tie_policy;
    result.degenerate_resamples = resamples - defined;
    result.tied_resamples = tied;
    const std::size_t count = tie_policy == TiePolicy::strict ? above : above + tied;
    result.p_value = static_cast<double>(count) / static_cast<double>(defined);
    return result;
}

// Williams' t-test for the difference of two correlations sharing the
// variable Z. With K the determinant of the 3x3 correlation matrix,
//   t = (r_xz - r_yz) * sqrt((n-1)(1 + r_xy))
//     / sqrt(2K(n-1)/(n-3) + ((r_xz + r_yz)^2 / 4)(1 - r_xy)^3),
// and the one-tailed p-value is the upper t tail with n-3 degrees of
// freedom.
inline TestResult williams_test(double r_xz, double r_yz, double r_xy, std::size_t n) {
    if (n < 4)
        throw domain_error("williams_test: need n >= 4 observations");
    for (double r : {r_xz, r_yz, r_xy})
        if (!(std::fabs(r) < 1.0))
            throw domain_error("williams_test: correlations must lie strictly in (-1, 1)");
    double k = 1.0 - r_xz * r_xz - r_yz * r_yz - r_xy * r_xy + 2.0 * r_xz * r_yz * r_xy;
    if (k < -1e-12)
        throw domain_error("williams_test: degenerate correlation triple (not positive semidefinite)");
    k = std::max(k, 0.0);

    const double nn = static_cast<double>(n);
    const double numerator = (r_xz - r_yz) * std::sqrt((nn - 1.0) * (1.0 + r_xy));
    const double sum_sq = (r_xz + r_yz) * (r_xz + r_yz) / 4.0;
    const double one_minus = 1.0 - r_xy;
    const double denominator =
        std::sqrt(2.0 * k * (nn - 1.0) / (nn - 3.0) + sum_sq * one_minus * one_minus * one_minus);
    const double t = numerator / denominator;

    TestResult result;
    result.delta = r_xz - r_yz;
    result.method = TestMethod::williams;
    result.p_value = student_t_sf(t, nn - 3.0);
    return result;
}

// Williams' test from score matrices: pairwise correlations at the chosen
// level, with n = number of systems. The summary-level variant averages
// correlations first and is flagged experimental.
inline TestResult williams_from_matrices(const Matrix& x, const Matrix& y, const Matrix& z,
                                         const CorrelationSpec& spec) {
    require_aligned(x, y, "williams_from_matrices");
    require_aligned(x, z, "williams_from_matrices");
    TestResult result;
    result.method = TestMethod::williams;
    result.experimental = spec.level == Level::summary;
    if (x == y) {
        // Identical metrics: zero numerator, p = 0.5 by the t = 0 limit.
        result.p_value = 0.5;
        result.delta = 0.0;
        return result;
    }
    const auto r_xz = correlation(x, z, spec).value;
    const auto r_yz = correlation(y, z, spec).value;
    const auto r_xy = correlation(x, y, spec).value;
    if (!r_xz || !r_yz || !r_xy)
        throw domain_error("williams_from_matrices: a pairwise correlation is undefined");
    result = williams_test(*r_xz, *r_yz, *r_xy, x.rows());
    result.experimental = spec.level == Level::summary;
    return result;
}

// Paired bootstrap test: all three matrices are resampled with identical
// index draws per iteration, and the p-value is the fraction of defined
// iterations whose delta_s = r(Xs,Zs) - r(Ys,Zs) is <= 0.
inline TestResult paired_bootstrap_test(const Matrix& x, const Matrix& y, const Matrix& z,
                                        BootMethod method, const CorrelationSpec& spec,
                                        std::size_t resamples, std::uint64_t seed,
                                        unsigned threads = 1) {
    require_aligned(x, y, "paired_bootstrap_test");
    require_aligned(x, z, "paired_bootstrap_test");
    if (resamples < 100)
        throw domain_error("paired_bootstrap_test: need at least 100 resamples");

    const auto r_xz = correlation(x, z, spec).value;
    const auto r_yz = correlation(y, z, spec).value;
    if (!r_xz || !r_yz)
        throw domain_error("paired_bootstrap_test: observed correlation undefined");

    std::vector<std::optional<double>> deltas(resamples);
    parallel_for(resamples, threads, [&](std::size_t i) {
        RngStream stream(seed, i);
        const auto idx = draw_boot_indices(x.rows(), x.cols(), method, stream);
        const Matrix xs = apply_boot_indices(x, idx);
        const Matrix ys = apply_boot_indices(y, idx);
        const Matrix zs = apply_boot_indices(z, idx);
        const auto rs_xz = correlation(xs, zs, spec).value;
        const auto rs_yz = correlation(ys, zs, spec).value;
        if (rs_xz && rs_yz)
            deltas[i] = *rs_xz - *rs_yz;
    });

    std::size_t defined = 0, non_positive = 0;
    for (const auto& d : deltas) {
        if (!d)
            continue;
        ++defined;
        if (*d <= 0.0)
            ++non_positive;
    }
    if (defined == 0)
        throw domain_error("paired_bootstrap_test: every resample produced an undefined correlation");

    TestResult result;
    result.delta = *r_xz - *r_yz;
    result.method = TestMethod::paired_boot;
    result.resamples = resamples;
    result.seed = seed;
    result.degenerate_resamples = resamples - defined;
    result.p_value = static_cast<double>(non_positive) / static_cast<double>(defined);
    return result;
}

struct SignificanceFlags {
    bool raw = false;
    bool corrected = false;

    friend bool operator==(const SignificanceFlags&, const SignificanceFlags&) = default;
};

// Bonferroni correction over a partition of the tests: within a group of
// size m, corrected significance requires p < alpha/m.
inline std::vector<SignificanceFlags> bonferroni_reject(std::span<const double> p_values,
                                                        double alpha,
                                                        const std::vector<std::vector<std::size_t>>& groups) {
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw domain_error("bonferroni_reject: p-value out of [0, 1]");

    std::vector<SignificanceFlags> flags(p_values.size());
    std::vector<bool> seen(p_values.size(), false);
    for (const auto& group : groups) {
        if (group.empty())
            throw domain_error("bonferroni_reject: empty group");
        const double threshold = alpha / static_cast<double>(group.size());
        for (std::size_t idx : group) {
            if (idx >= p_values.size())
                throw domain_error("bonferroni_reject: group index out of range");
            if (seen[idx])
                throw domain_error("bonferroni_reject: groups must not overlap");
            seen[idx] = true;
            flags[idx].raw = p_values[idx] < alpha;
            flags[idx].corrected = p_values[idx] < threshold;
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw domain_error("bonferroni_reject: groups must cover every p-value");
    return flags;
}

} // namespace metricconf
