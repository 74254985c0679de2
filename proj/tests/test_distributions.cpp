#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metricconf/distributions.hpp"

using Catch::Matchers::WithinAbs;
using metricconf::normal_quantile;
using metricconf::normal_sf;
using metricconf::student_t_sf;

TEST_CASE("normal quantile matches high-precision references") {
    // Reference values frozen from scipy.stats.norm.ppf.
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK_THAT(normal_quantile(0.975), WithinAbs(1.9599639845400543, 1e-9));
    CHECK_THAT(normal_quantile(0.025), WithinAbs(-1.9599639845400543, 1e-9));
    CHECK_THAT(normal_quantile(0.3), WithinAbs(-0.5244005127080409, 1e-9));
    CHECK_THAT(normal_quantile(1e-10), WithinAbs(-6.361340902404056, 1e-9));
    CHECK_THAT(normal_quantile(1.0 - 1e-10), WithinAbs(6.361340889697422, 1e-9));
}

TEST_CASE("normal quantile rejects probabilities outside the open interval") {
    CHECK_THROWS_AS(normal_quantile(0.0), metricconf::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), metricconf::domain_error);
    CHECK_THROWS_AS(normal_quantile(-0.25), metricconf::domain_error);
}

TEST_CASE("normal survival function complements the quantile") {
    CHECK(normal_sf(0.0) == 0.5);
    CHECK_THAT(normal_sf(1.9599639845400543), WithinAbs(0.025, 1e-12));
    CHECK_THAT(normal_sf(4.4946657497549465), WithinAbs(3.4839655364249246e-06, 1e-12));
    for (const double z : {-2.5, -0.3, 0.9, 3.1})
        CHECK_THAT(normal_sf(z) + normal_sf(-z), WithinAbs(1.0, 1e-14));
    for (const double p : {0.01, 0.2, 0.5, 0.77, 0.999})
        CHECK_THAT(normal_sf(normal_quantile(1.0 - p)), WithinAbs(p, 1e-11));
}

TEST_CASE("student t survival function matches references") {
    // Reference values frozen from scipy.stats.t.sf.
    CHECK_THAT(student_t_sf(2.228139, 10), WithinAbs(0.024999993726441273, 1e-8));
    CHECK_THAT(student_t_sf(2.5, 47), WithinAbs(0.007983434028788929, 1e-8));
    CHECK_THAT(student_t_sf(1.0, 1), WithinAbs(0.25, 1e-10));
    CHECK(student_t_sf(0.0, 5) == 0.5);
}

TEST_CASE("student t tails are symmetric and monotone") {
    for (const double t : {0.5, 1.3, 2.9})
        CHECK_THAT(student_t_sf(t, 7) + student_t_sf(-t, 7), WithinAbs(1.0, 1e-12));
    double previous = 1.0;
    for (double t = -4.0; t <= 4.0; t += 0.5) {
        const double p = student_t_sf(t, 12);
        CHECK(p < previous);
        previous = p;
    }
}

TEST_CASE("student t approaches the normal for large degrees of freedom") {
    CHECK_THAT(student_t_sf(1.96, 1e6), WithinAbs(normal_sf(1.96), 1e-5));
}

TEST_CASE("student t rejects non-positive degrees of freedom") {
    CHECK_THROWS_AS(student_t_sf(1.0, 0.0), metricconf::domain_error);
    CHECK_THROWS_AS(student_t_sf(1.0, -3.0), metricconf::domain_error);
}
