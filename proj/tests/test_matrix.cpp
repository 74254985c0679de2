#include <catch2/catch_amalgamated.hpp>

#include "metricconf/matrix.hpp"

using metricconf::Matrix;

TEST_CASE("matrix stores row-major and exposes rows and columns") {
    const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 2) == 3.0);
    CHECK(m(1, 0) == 4.0);

    const auto row = m.row(1);
    CHECK(std::vector<double>(row.begin(), row.end()) == std::vector<double>{4, 5, 6});
    CHECK(m.column(1) == std::vector<double>{2, 5});
    CHECK(m.flat()[5] == 6.0);
}

TEST_CASE("row means average across inputs") {
    const Matrix m = Matrix::from_rows({{1, 3}, {2, 4}, {6, 0}});
    CHECK(m.row_means() == std::vector<double>{2, 3, 3});
}

TEST_CASE("ragged row literals are rejected") {
    CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), metricconf::domain_error);
}

TEST_CASE("shape mismatches are caught at the boundary") {
    const Matrix a(2, 3), b(3, 2);
    CHECK_THROWS_AS(metricconf::require_aligned(a, b, "test"), metricconf::domain_error);
    CHECK_NOTHROW(metricconf::require_aligned(a, a, "test"));
}

TEST_CASE("equality compares shape and contents") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Matrix b = a;
    CHECK(a == b);
    b(1, 1) = 0.0;
    CHECK_FALSE(a == b);
    CHECK_FALSE(a == Matrix(4, 1));
}
