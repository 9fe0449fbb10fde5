#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hopflab/errors.hpp"
#include "hopflab/grid_lab.hpp"

using namespace hopflab;

namespace {

double xi_closed(int m, long k) {
    double a = 1 - 1.0 / m;
    double kap = std::min({a / 4, a * std::pow(0.125, a + 1), 1 - std::pow(8.0, -a)});
    double best = 0;
    for (int q = 4; q <= 16; ++q) {
        long ell = 0;
        for (long p = q; p <= k; p *= q) ++ell;
        best = std::max(best, std::pow(q, -m) * kap / (4.0 * q) * ell);
    }
    return best;
}

}  // namespace

TEST_CASE("critical scaling rows") {
    auto rep = run_scaling(2, 0.5, {2, 4, 8}, SolveOptions{});
    REQUIRE(rep.rows.size() == 3);
    for (const auto& r : rep.rows) {
        CHECK(r.lower <= r.upper);
        CHECK(r.xi_upper == doctest::Approx(r.upper / r.k));
        CHECK(r.lower == doctest::Approx(xi_closed(2, r.k) * r.k));
        CHECK(r.flux_lower <= r.upper + 1e-9);
    }
    CHECK(rep.rows[2].xi_upper > rep.rows[0].xi_upper);
}

TEST_CASE("subcritical rows carry no grid bound") {
    auto rep = run_scaling(2, 0.75, {2, 4}, SolveOptions{});
    for (const auto& r : rep.rows) CHECK(r.lower == 0);
}

TEST_CASE("scaling guards") {
    CHECK_THROWS_AS(run_scaling(2, 0.5, {4, 2}, SolveOptions{}), InputError);
    CHECK_THROWS_AS(run_scaling(2, 0.5, {400}, SolveOptions{}), ResourceError);
    CHECK_THROWS_AS(run_scaling(5, 0.5, {2}, SolveOptions{}), InputError);
}

TEST_CASE("csv layout") {
    auto rep = run_scaling(2, 0.5, {2}, SolveOptions{});
    std::istringstream in(report_csv(rep));
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "m,alpha,k,upper,lower,xi_upper,xi_lower,seconds");
    CHECK(row.rfind("2,0.5,2,", 0) == 0);
    auto j = report_json(rep);
    CHECK(j["rows"].size() == 1);
}

TEST_CASE("singularity lattice") {
    auto r1 = singularity_grid(1);
    CHECK(r1.points.size() == 1);
    CHECK(r1.lower == 0);
    auto r2 = singularity_grid(2), r4 = singularity_grid(4);
    CHECK(r2.points.size() == 16);
    CHECK(r4.points.size() == 256);
    CHECK(r4.lower == doctest::Approx(xi_closed(4, 4) * 64 / 40));
    CHECK(r4.ratio > r2.ratio);
    CHECK(r4.lower <= r4.upper);
    CHECK(r4.flux_lower <= r4.upper);
    CHECK_THROWS_AS(singularity_grid(7), InputError);
}

TEST_CASE("budget normalization and sums") {
    // independent normalization: direct sum to 2e6 plus the integral tail
    double s = 0;
    for (long i = 2; i <= 2000000; ++i) {
        double x = static_cast<double>(i), l = std::log(x);
        s += 1 / (x * x * x * x * l * l);
    }
    double c = 1 / (8 * s);
    auto rows = budget_series_at({10, 1000, 100000});
    CHECK(rows[0].c == doctest::Approx(c).epsilon(1e-12));
    CHECK(rows[2].S1 == doctest::Approx(0.125).epsilon(1e-9));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].S2 > rows[i - 1].S2);
        CHECK(rows[i].S3 > rows[i - 1].S3);
    }
    for (const auto& r : rows)
        if (r.N >= 3) CHECK(r.S3 >= r.S3_floor);
    double s2 = 0;
    for (long i = 2; i <= 1000; ++i) {
        double x = static_cast<double>(i), l = std::log(x);
        s2 += c * x * x * x / (x * x * x * x * l * l);
    }
    CHECK(rows[1].S2 == doctest::Approx(s2).epsilon(1e-12));
    CHECK(budget_series(1000).S3 == doctest::Approx(rows[1].S3).epsilon(1e-14));
    CHECK_THROWS_AS(budget_series(1), InputError);
}
