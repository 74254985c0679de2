#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "metricconf/significance.hpp"

using namespace metricconf;
using Catch::Matchers::WithinAbs;

namespace {

const CorrelationSpec kSysPearson{Level::system, Coefficient::pearson};

Matrix random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> noise;
    Matrix m(rows, cols);
    for (auto& v : m.flat())
        v = noise(gen);
    return m;
}

} // namespace

TEST_CASE("standardize centers and scales by the global moments") {
    const Matrix m = Matrix::from_rows({{1, 3}, {1, 3}});
    CHECK(standardize(m) == Matrix::from_rows({{-1, 1}, {-1, 1}}));
}

TEST_CASE("standardize is idempotent") {
    const Matrix m = random_matrix(5, 4, 3);
    const Matrix once = standardize(m);
    const Matrix twice = standardize(once);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            CHECK_THAT(twice(i, j), WithinAbs(once(i, j), 1e-14));
}

TEST_CASE("standardize rejects degenerate matrices") {
    CHECK_THROWS_AS(standardize(Matrix(3, 2, 7.0)), domain_error);
    CHECK_THROWS_AS(standardize(Matrix(0, 0)), domain_error);
}

TEST_CASE("perm_sample consumes one coin per unit in row-major order") {
    const Matrix x = random_matrix(4, 3, 1);
    const Matrix y = random_matrix(4, 3, 2);

    SECTION("systems: one coin per row") {
        RngStream coins(5, 9);
        std::vector<bool> swap_row;
        for (std::size_t i = 0; i < x.rows(); ++i)
            swap_row.push_back(fair_coin(coins));

        RngStream stream(5, 9);
        const auto [xs, ys] = perm_sample(x, y, PermMethod::systems, stream);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                CHECK(xs(i, j) == (swap_row[i] ? y(i, j) : x(i, j)));
                CHECK(ys(i, j) == (swap_row[i] ? x(i, j) : y(i, j)));
            }
    }
    SECTION("inputs: one coin per column") {
        RngStream coins(6, 0);
        std::vector<bool> swap_col;
        for (std::size_t j = 0; j < x.cols(); ++j)
            swap_col.push_back(fair_coin(coins));

        RngStream stream(6, 0);
        const auto [xs, ys] = perm_sample(x, y, PermMethod::inputs, stream);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                CHECK(xs(i, j) == (swap_col[j] ? y(i, j) : x(i, j)));
    }
    SECTION("both: one coin per cell") {
        RngStream coins(7, 3);
        Matrix expected_x = x;
        Matrix expected_y = y;
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                if (fair_coin(coins)) {
                    expected_x(i, j) = y(i, j);
                    expected_y(i, j) = x(i, j);
                }

        RngStream stream(7, 3);
        const auto [xs, ys] = perm_sample(x, y, PermMethod::both, stream);
        CHECK(xs == expected_x);
        CHECK(ys == expected_y);
    }
}

TEST_CASE("perm_sample preserves the cell-level multiset") {
    const Matrix x = random_matrix(4, 3, 11);
    const Matrix y = random_matrix(4, 3, 12);
    for (auto method : {PermMethod::systems, PermMethod::inputs, PermMethod::both}) {
        RngStream stream(21, 0);
        const auto [xs, ys] = perm_sample(x, y, method, stream);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const bool kept = xs(i, j) == x(i, j) && ys(i, j) == y(i, j);
                const bool swapped = xs(i, j) == y(i, j) && ys(i, j) == x(i, j);
                CHECK((kept || swapped));
            }
    }
}

TEST_CASE("perm_sample eventually produces both the identity and the full swap") {
    const Matrix x = random_matrix(3, 2, 31);
    const Matrix y = random_matrix(3, 2, 32);
    bool saw_identity = false, saw_full_swap = false;
    for (std::uint64_t i = 0; i < 200; ++i) {
        RngStream stream(55, i);
        const auto [xs, ys] = perm_sample(x, y, PermMethod::systems, stream);
        saw_identity = saw_identity || (xs == x && ys == y);
        saw_full_swap = saw_full_swap || (xs == y && ys == x);
    }
    CHECK(saw_identity);
    CHECK(saw_full_swap);
}

TEST_CASE("permutation_test on identical metrics is decided by the tie policy") {
    const Matrix x = random_matrix(5, 4, 41);
    const Matrix z = random_matrix(5, 4, 42);

    const auto strict = permutation_test(x, x, z, PermMethod::both, kSysPearson, 200, 7);
    CHECK(strict.p_value == 0.0);
    CHECK(strict.delta == 0.0);
    CHECK(strict.tied_resamples == 200);
    CHECK(strict.degenerate_resamples == 0);

    const auto inclusive =
        permutation_test(x, x, z, PermMethod::both, kSysPearson, 200, 7, TiePolicy::inclusive);
    CHECK(inclusive.p_value == 1.0);
}

TEST_CASE("permutation_test inclusive p is never below strict p") {
    const Matrix x = random_matrix(6, 5, 51);
    const Matrix y = random_matrix(6, 5, 52);
    const Matrix z = random_matrix(6, 5, 53);
    for (auto method : {PermMethod::systems, PermMethod::inputs, PermMethod::both}) {
        const auto strict = permutation_test(x, y, z, method, kSysPearson, 300, 9);
        const auto inclusive =
            permutation_test(x, y, z, method, kSysPearson, 300, 9, TiePolicy::inclusive);
        CHECK(inclusive.p_value >= strict.p_value);
        CHECK(strict.method == test_method_of(method));
    }
}

TEST_CASE("permutation_test is invariant to affine rescaling of a metric") {
    const Matrix x = random_matrix(6, 5, 61);
    const Matrix y = random_matrix(6, 5, 62);
    const Matrix z = random_matrix(6, 5, 63);
    Matrix x_scaled = x;
    for (auto& v : x_scaled.flat())
        v = 10.0 * v + 3.0;

    for (auto method : {PermMethod::systems, PermMethod::inputs, PermMethod::both}) {
        const auto base = permutation_test(x, y, z, method, kSysPearson, 400, 17);
        const auto scaled = permutation_test(x_scaled, y, z, method, kSysPearson, 400, 17);
        CHECK(base.p_value == scaled.p_value);
    }
}

TEST_CASE("permutation_test separates a perfect metric from an inverted one") {
    const Matrix z = random_matrix(6, 4, 71);
    Matrix anti = z;
    for (auto& v : anti.flat())
        v = -v;

    const auto good_vs_bad = permutation_test(z, anti, z, PermMethod::both, kSysPearson, 500, 3);
    CHECK(good_vs_bad.p_value <= 0.05);
    CHECK(good_vs_bad.delta > 1.9);

    const auto bad_vs_good = permutation_test(anti, z, z, PermMethod::both, kSysPearson, 500, 3);
    CHECK(bad_vs_good.p_value >= 0.9);
}

TEST_CASE("permutation_test matches itself across thread counts") {
    const Matrix x = random_matrix(6, 5, 81);
    const Matrix y = random_matrix(6, 5, 82);
    const Matrix z = random_matrix(6, 5, 83);
    const auto serial = permutation_test(x, y, z, PermMethod::both, kSysPearson, 400, 29,
                                         TiePolicy::strict, 1);
    const auto parallel = permutation_test(x, y, z, PermMethod::both, kSysPearson, 400, 29,
                                           TiePolicy::strict, 8);
    CHECK(serial.p_value == parallel.p_value);
    CHECK(serial.tied_resamples == parallel.tied_resamples);
    CHECK(serial.degenerate_resamples == parallel.degenerate_resamples);
}

TEST_CASE("permutation_test rejects unusable requests") {
    const Matrix x = random_matrix(4, 3, 91);
    const Matrix z = random_matrix(4, 3, 92);
    CHECK_THROWS_AS(permutation_test(x, x, z, PermMethod::both, kSysPearson, 99, 1), domain_error);
    CHECK_THROWS_AS(
        permutation_test(Matrix(4, 3, 1.0), x, z, PermMethod::both, kSysPearson, 200, 1),
        domain_error);
    const Matrix misshapen = random_matrix(3, 3, 93);
    CHECK_THROWS_AS(permutation_test(x, misshapen, z, PermMethod::both, kSysPearson, 200, 1),
                    domain_error);
}

TEST_CASE("williams_test gives p = 0.5 for equal correlations") {
    const auto result = williams_test(0.6, 0.6, 0.4, 25);
    CHECK(result.p_value == 0.5);
    CHECK(result.delta == 0.0);
    CHECK(result.method == TestMethod::williams);
}

TEST_CASE("williams_test matches a hand-computed case") {
    const auto result = williams_test(0.9, 0.8, 0.7, 50);
    CHECK_THAT(result.p_value, WithinAbs(0.013834817370517722, 1e-8));
    CHECK_THAT(result.delta, WithinAbs(0.1, 1e-15));
}

TEST_CASE("williams_test swapping the metrics mirrors the p-value") {
    const struct {
        double r_xz, r_yz, r_xy;
        std::size_t n;
    } cases[] = {{0.9, 0.8, 0.7, 50}, {0.3, 0.5, 0.1, 12}, {-0.2, 0.4, -0.3, 30}};
    for (const auto& c : cases) {
        const double forward = williams_test(c.r_xz, c.r_yz, c.r_xy, c.n).p_value;
        const double backward = williams_test(c.r_yz, c.r_xz, c.r_xy, c.n).p_value;
        CHECK_THAT(forward + backward, WithinAbs(1.0, 1e-10));
    }
}

TEST_CASE("williams_test p shrinks as the correlation gap widens") {
    const double close = williams_test(0.8, 0.7, 0.6, 30).p_value;
    const double far = williams_test(0.9, 0.7, 0.6, 30).p_value;
    CHECK(far < close);
    CHECK(close < 0.5);
}

TEST_CASE("williams_test rejects unusable correlation triples") {
    CHECK_THROWS_AS(williams_test(0.9, 0.8, 0.7, 3), domain_error);
    CHECK_THROWS_AS(williams_test(1.0, 0.8, 0.7, 50), domain_error);
    CHECK_THROWS_AS(williams_test(0.9, -1.0, 0.7, 50), domain_error);
    // Not a valid correlation matrix: determinant far below zero.
    CHECK_THROWS_AS(williams_test(0.9, -0.9, 0.9, 50), domain_error);
}

TEST_CASE("williams_from_matrices agrees with the scalar form") {
    const Matrix x = random_matrix(8, 5, 101);
    const Matrix y = random_matrix(8, 5, 102);
    const Matrix z = random_matrix(8, 5, 103);

    const auto from_matrices = williams_from_matrices(x, y, z, kSysPearson);
    const auto r_xz = correlation(x, z, kSysPearson).value;
    const auto r_yz = correlation(y, z, kSysPearson).value;
    const auto r_xy = correlation(x, y, kSysPearson).value;
    REQUIRE(r_xz);
    const auto scalar = williams_test(*r_xz, *r_yz, *r_xy, x.rows());
    CHECK(from_matrices.p_value == scalar.p_value);
    CHECK(from_matrices.delta == scalar.delta);
    CHECK_FALSE(from_matrices.experimental);
}

TEST_CASE("williams_from_matrices on identical metrics is the even split") {
    const Matrix x = random_matrix(6, 4, 111);
    const Matrix z = random_matrix(6, 4, 112);
    const auto result = williams_from_matrices(x, x, z, kSysPearson);
    CHECK(result.p_value == 0.5);
    CHECK(result.delta == 0.0);
}

TEST_CASE("williams_from_matrices flags the summary level as experimental") {
    const Matrix x = random_matrix(6, 4, 121);
    const Matrix y = random_matrix(6, 4, 122);
    const Matrix z = random_matrix(6, 4, 123);
    const CorrelationSpec summary{Level::summary, Coefficient::pearson};
    CHECK(williams_from_matrices(x, y, z, summary).experimental);
    CHECK(williams_from_matrices(x, x, z, summary).experimental);
}

TEST_CASE("paired_bootstrap_test on identical metrics never rejects") {
    const Matrix x = random_matrix(5, 4, 131);
    const Matrix z = random_matrix(5, 4, 132);
    const auto result = paired_bootstrap_test(x, x, z, BootMethod::both, kSysPearson, 200, 5);
    CHECK(result.p_value == 1.0);
    CHECK(result.delta == 0.0);
    CHECK(result.method == TestMethod::paired_boot);
}

TEST_CASE("paired_bootstrap_test separates a perfect metric from an inverted one") {
    const Matrix z = random_matrix(6, 4, 141);
    Matrix anti = z;
    for (auto& v : anti.flat())
        v = -v;
    const auto result = paired_bootstrap_test(z, anti, z, BootMethod::both, kSysPearson, 300, 11);
    CHECK(result.p_value == 0.0);
    CHECK(result.delta > 1.9);
}

TEST_CASE("paired_bootstrap_test matches itself across thread counts and seeds") {
    const Matrix x = random_matrix(6, 5, 151);
    const Matrix y = random_matrix(6, 5, 152);
    const Matrix z = random_matrix(6, 5, 153);
    const auto serial = paired_bootstrap_test(x, y, z, BootMethod::systems, kSysPearson, 400, 23, 1);
    const auto parallel =
        paired_bootstrap_test(x, y, z, BootMethod::systems, kSysPearson, 400, 23, 8);
    CHECK(serial.p_value == parallel.p_value);
    CHECK(serial.degenerate_resamples == parallel.degenerate_resamples);

    const auto reseeded = paired_bootstrap_test(x, y, z, BootMethod::systems, kSysPearson, 400, 24);
    CHECK(serial.seed != reseeded.seed);
}

TEST_CASE("paired_bootstrap_test rejects unusable requests") {
    const Matrix x = random_matrix(4, 3, 161);
    const Matrix z = random_matrix(4, 3, 162);
    CHECK_THROWS_AS(paired_bootstrap_test(x, x, z, BootMethod::both, kSysPearson, 99, 1),
                    domain_error);
    CHECK_THROWS_AS(
        paired_bootstrap_test(Matrix(4, 3, 1.0), x, z, BootMethod::both, kSysPearson, 200, 1),
        domain_error);
}

TEST_CASE("bonferroni_reject applies the group-size threshold") {
    SECTION("two tests in one group") {
        const std::vector<double> ps{0.01, 0.2};
        const auto flags = bonferroni_reject(ps, 0.05, {{0, 1}});
        REQUIRE(flags.size() == 2);
        CHECK(flags[0] == SignificanceFlags{true, true});
        CHECK(flags[1] == SignificanceFlags{false, false});
    }
    SECTION("raw-significant but not corrected") {
        const std::vector<double> ps{0.03, 0.03, 0.03};
        const auto flags = bonferroni_reject(ps, 0.05, {{0, 1, 2}});
        for (const auto& f : flags)
            CHECK(f == SignificanceFlags{true, false});
    }
    SECTION("threshold comparison is strict") {
        const std::vector<double> ps{0.025};
        const auto flags = bonferroni_reject(ps, 0.05, {{0}});
        CHECK(flags[0].raw);
        const auto halved = bonferroni_reject(std::vector<double>{0.025, 0.9}, 0.05, {{0, 1}});
        CHECK_FALSE(halved[0].corrected);
    }
    SECTION("empty input") {
        CHECK(bonferroni_reject(std::vector<double>{}, 0.05, {}).empty());
    }
    SECTION("independent groups correct independently") {
        const std::vector<double> ps{0.03, 0.03};
        const auto flags = bonferroni_reject(ps, 0.05, {{0}, {1}});
        CHECK(flags[0] == SignificanceFlags{true, true});
        CHECK(flags[1] == SignificanceFlags{true, true});
    }
}

TEST_CASE("bonferroni_reject corrected implies raw") {
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> ps(12);
    for (auto& p : ps)
        p = unif(gen);
    const auto flags = bonferroni_reject(ps, 0.05, {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}});
    for (const auto& f : flags)
        if (f.corrected)
            CHECK(f.raw);
}

TEST_CASE("bonferroni_reject validates the partition") {
    const std::vector<double> ps{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(bonferroni_reject(ps, 0.05, {{0, 1}, {1, 2}}), domain_error);
    CHECK_THROWS_AS(bonferroni_reject(ps, 0.05, {{0, 1}}), domain_error);
    CHECK_THROWS_AS(bonferroni_reject(ps, 0.05, {{0, 1, 2, 3}}), domain_error);
    CHECK_THROWS_AS(bonferroni_reject(ps, 0.05, {{0, 1, 2}, {}}), domain_error);
    CHECK_THROWS_AS(bonferroni_reject(std::vector<double>{1.5}, 0.05, {{0}}), domain_error);
}
