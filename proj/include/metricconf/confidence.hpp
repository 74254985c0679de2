#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metricconf/correlation.hpp"
#include "metricconf/distributions.hpp"
#include "metricconf/error.hpp"
#include "metricconf/matrix.hpp"
#include "metricconf/parallel.hpp"
#include "metricconf/rng.hpp"

namespace metricconf {

enum class BootMethod { systems, inputs, both };

enum class CiMethod { fisher, fisher_summary, boot_systems, boot_inputs, boot_both };

inline const char* to_string(BootMethod m) {
    switch (m) {
    case BootMethod::systems: return "boot-systems";
    case BootMethod::inputs: return "boot-inputs";
    default: return "boot-both";
    }
}

inline const char* to_string(CiMethod m) {
    switch (m) {
    case CiMethod::fisher: return "fisher";
    case CiMethod::fisher_summary: return "fisher-summary";
    case CiMethod::boot_systems: return "boot-systems";
    case CiMethod::boot_inputs: return "boot-inputs";
    default: return "boot-both";
    }
}

inline CiMethod ci_method_of(BootMethod m) {
    switch (m) {
    case BootMethod::systems: return CiMethod::boot_systems;
    case BootMethod::inputs: return CiMethod::boot_inputs;
    default: return CiMethod::boot_both;
    }
}

inline BootMethod boot_method_of(CiMethod m) {
    switch (m) {
    case CiMethod::boot_systems: return BootMethod::systems;
    case CiMethod::boot_inputs: return BootMethod::inputs;
    case CiMethod::boot_both: return BootMethod::both;
    default: throw domain_error("boot_method_of: not a bootstrap method");
    }
}

// Observation-count offset b and scale c of the Fisher-transform standard
// error, per coefficient; Spearman's c depends on the point estimate.
struct FisherConstants {
    int b;
    double c;
};

inline FisherConstants fisher_constants(Coefficient coefficient, double r) {
    switch (coefficient) {
    case Coefficient::pearson: return {3, 1.0};
    case Coefficient::spearman: return {3, std::sqrt(1.0 + r * r / 2.0)};
    default: return {4, std::sqrt(0.437)};
    }
}

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.05;
    double point = 0.0;
    CiMethod method = CiMethod::fisher;
    std::size_t resamples = 0;          // 0 for Fisher
    std::uint64_t seed = 0;             // unused for Fisher
    std::size_t degenerate_resamples = 0;

    bool contains(double r) const { return lower <= r && r <= upper; }
};

// CI on the arctanh scale, mapped back through tanh:
//   r_{u,l} = tanh(arctanh(r) +- z_{alpha/2} * c / sqrt(n - b)).
inline ConfidenceInterval fisher_ci(double r, std::size_t n, Coefficient coefficient, double alpha,
                                    Level level = Level::system) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("fisher_ci: alpha must lie in (0, 1)");
    if (std::fabs(r) >= 1.0)
        throw domain_error("fisher_ci: |r| = 1 has no arctanh image; use a bootstrap CI instead");
    const auto constants = fisher_constants(coefficient, r);
    if (n <= static_cast<std::size_t>(constants.b))
        throw domain_error("fisher_ci: need n > " + std::to_string(constants.b) +
                           " observations for " + to_string(coefficient));
    const double z_r = std::atanh(r);
    const double half_width = normal_quantile(1.0 - alpha / 2.0) * constants.c /
                              std::sqrt(static_cast<double>(n) - constants.b);
    ConfidenceInterval ci;
    ci.lower = std::tanh(z_r - half_width);
    ci.upper = std::tanh(z_r + half_width);
    ci.alpha = alpha;
    ci.point = r;
    ci.method = level == Level::system ? CiMethod::fisher : CiMethod::fisher_summary;
    return ci;
}

// Row/column index draws for one bootstrap resample. An empty vector means
// the axis is kept as-is. Rows are drawn before columns.
struct BootIndices {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
};

inline BootIndices draw_boot_indices(std::size_t n_rows, std::size_t n_cols, BootMethod method,
                                     RngStream& stream) {
    BootIndices idx;
    if (method != BootMethod::inputs) {
        idx.rows.resize(n_rows);
        for (auto& r : idx.rows)
            r = uniform_index(stream, n_rows);
    }
    if (method != BootMethod::systems) {
        idx.cols.resize(n_cols);
        for (auto& c : idx.cols)
            c = uniform_index(stream, n_cols);
    }
    return idx;
}

inline Matrix apply_boot_indices(const Matrix& m, const BootIndices& idx) {
    const std::size_t out_rows = idx.rows.empty() ? m.rows() : idx.rows.size();
    const std::size_t out_cols = idx.cols.empty() ? m.cols() : idx.cols.size();
    Matrix out(out_rows, out_cols);
    for (std::size_t i = 0; i < out_rows; ++i) {
        const std::size_t src_row = idx.rows.empty() ? i : idx.rows[i];
        if (src_row >= m.rows())
            throw domain_error("apply_boot_indices: row index out of range");
        for (std::size_t j = 0; j < out_cols; ++j) {
            const std::size_t src_col = idx.cols.empty() ? j : idx.cols[j];
            if (src_col >= m.cols())
                throw domain_error("apply_boot_indices: column index out of range");
            out(i, j) = m(src_row, src_col);
        }
    }
    return out;
}

// One resample of the aligned pair: the same sampled indices are applied
// to both matrices.
inline std::pair<Matrix, Matrix> boot_sample(const Matrix& x, const Matrix& z, BootMethod method,
                                             RngStream& stream) {
    require_aligned(x, z, "boot_sample");
    const auto idx = draw_boot_indices(x.rows(), x.cols(), method, stream);
    return {apply_boot_indices(x, idx), apply_boot_indices(z, idx)};
}

namespace detail {

// Linear interpolation between order statistics (the common "type 7" rule):
// at quantile q the index is h = (n-1)q and the value interpolates between
// the floor(h)-th and next order statistics.
inline double percentile_linear(const std::vector<double>& sorted, double q) {
    if (sorted.empty())
        throw domain_error("percentile_linear: empty sample");
    if (sorted.size() == 1)
        return sorted.front();
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size())
        return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace detail

// Percentile bootstrap CI: k resampled correlations, iteration i drawing
// from stream (seed, i); the interval is the empirical (alpha/2, 1-alpha/2)
// percentile pair of the defined resample correlations. Degenerate
// resamples (undefined correlation) are dropped and counted rather than
// retried, keeping stream i tied to iteration i under any thread count.
inline ConfidenceInterval bootstrap_ci(const Matrix& x, const Matrix& z, BootMethod method,
                                       const CorrelationSpec& spec, std::size_t resamples,
                                       double alpha, std::uint64_t seed, unsigned threads = 1) {
    require_aligned(x, z, "bootstrap_ci");
    if (resamples < 100)
        throw domain_error("bootstrap_ci: need at least 100 resamples");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("bootstrap_ci: alpha must lie in (0, 1)");

    const auto point = correlation(x, z, spec);
    if (!point.value)
        throw domain_error("bootstrap_ci: correlation undefined on the original data");

    std::vector<std::optional<double>> draws(resamples);
    parallel_for(resamples, threads, [&](std::size_t i) {
        RngStream stream(seed, i);
        const auto [xs, zs] = boot_sample(x, z, method, stream);
        draws[i] = correlation(xs, zs, spec).value;
    });

    std::vector<double> defined;
    defined.reserve(resamples);
    for (const auto& d : draws)
        if (d)
            defined.push_back(*d);
    if (defined.empty())
        throw domain_error("bootstrap_ci: every resample produced an undefined correlation");
    std::sort(defined.begin(), defined.end());

    ConfidenceInterval ci;
    ci.lower = detail::percentile_linear(defined, alpha / 2.0);
    ci.upper = detail::percentile_linear(defined, 1.0 - alpha / 2.0);
    ci.alpha = alpha;
    ci.point = *point.value;
    ci.method = ci_method_of(method);
    ci.resamples = resamples;
    ci.seed = seed;
    ci.degenerate_resamples = resamples - defined.size();
    return ci;
}

} // namespace metricconf
