#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metricconf/error.hpp"
#include "metricconf/matrix.hpp"

namespace metricconf {

enum class Coefficient { pearson, spearman, kendall };
enum class Level { system, summary };

// What summary_level does with inputs whose per-column correlation is
// undefined: skip them (surfacing the count) or make the whole result
// undefined.
enum class UndefinedPolicy { skip_and_average, propagate };

struct CorrelationSpec {
    Level level = Level::system;
    Coefficient coefficient = Coefficient::pearson;
};

struct CorrelationResult {
    std::optional<double> value;
    Level level = Level::system;
    Coefficient coefficient = Coefficient::pearson;
    std::size_t skipped_inputs = 0; // summary level only
};

inline const char* to_string(Coefficient c) {
    switch (c) {
    case Coefficient::pearson: return "pearson";
    case Coefficient::spearman: return "spearman";
    default: return "kendall";
    }
}

inline const char* to_string(Level l) {
    return l == Level::system ? "sys" : "sum";
}

namespace detail {

inline void require_pair(std::span<const double> x, std::span<const double> y, const char* where) {
    if (x.size() != y.size())
        throw domain_error(std::string(where) + ": vectors have different lengths");
    if (x.size() < 2)
        throw domain_error(std::string(where) + ": need at least 2 observations");
}

} // namespace detail

// Product-moment correlation; empty when either vector has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "pearson");
    const std::size_t n = x.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

// 1-based ranks; tied values receive the mean rank of their block.
inline std::vector<double> rank_with_ties(std::span<const double> x) {
    if (x.empty())
        throw domain_error("rank_with_ties: empty input");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]])
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg_rank;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "spearman");
    return pearson(rank_with_ties(x), rank_with_ties(y));
}

// Kendall's tau-b by pairwise enumeration. With C concordant, D discordant,
// and tie counts per axis, tau-b = (C - D) / sqrt((C+D+Tx)(C+D+Ty));
// undefined when either axis is fully tied.
inline std::optional<double> kendall(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "kendall");
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0;
    long long tied_x_only = 0, tied_y_only = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0)
                continue;
            if (dx == 0.0)
                ++tied_x_only;
            else if (dy == 0.0)
                ++tied_y_only;
            else if ((dx > 0.0) == (dy > 0.0))
                ++concordant;
            else
                ++discordant;
        }
    }
    const double cd = static_cast<double>(concordant + discordant);
    const double denom =
        std::sqrt((cd + static_cast<double>(tied_y_only)) * (cd + static_cast<double>(tied_x_only)));
    if (denom == 0.0)
        return std::nullopt;
    return static_cast<double>(concordant - discordant) / denom;
}

inline std::optional<double> correlate(Coefficient c, std::span<const double> x,
                                       std::span<const double> y) {
    switch (c) {
    case Coefficient::pearson: return pearson(x, y);
    case Coefficient::spearman: return spearman(x, y);
    default: return kendall(x, y);
    }
}

// Correlation between the two N-vectors of per-system mean scores.
inline CorrelationResult system_level(const Matrix& x, const Matrix& z, Coefficient coefficient) {
    require_aligned(x, z, "system_level");
    if (x.rows() < 2)
        throw domain_error("system_level: need at least 2 systems");
    CorrelationResult result{std::nullopt, Level::system, coefficient, 0};
    result.value = correlate(coefficient, x.row_means(), z.row_means());
    return result;
}

// Mean over inputs of the per-input correlation across systems. Inputs with
// an undefined column correlation are skipped and counted, or propagate,
// per policy.
inline CorrelationResult summary_level(const Matrix& x, const Matrix& z, Coefficient coefficient,
                                       UndefinedPolicy policy = UndefinedPolicy::skip_and_average) {
    require_aligned(x, z, "summary_level");
    if (x.rows() < 2)
        throw domain_error("summary_level: need at least 2 systems");
    CorrelationResult result{std::nullopt, Level::summary, coefficient, 0};
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const auto r = correlate(coefficient, x.column(j), z.column(j));
        if (r) {
            sum += *r;
            ++defined;
        } else {
            ++result.skipped_inputs;
            if (policy == UndefinedPolicy::propagate)
                return result;
        }
    }
    if (defined > 0)
        result.value = sum / static_cast<double>(defined);
    return result;
}

inline CorrelationResult correlation(const Matrix& x, const Matrix& z, const CorrelationSpec& spec,
                                     UndefinedPolicy policy = UndefinedPolicy::skip_and_average) {
    return spec.level == Level::system ? system_level(x, z, spec.coefficient)
                                       : summary_level(x, z, spec.coefficient, policy);
}

} // namespace metricconf
