#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hopflab/errors.hpp"
#include "hopflab/solver.hpp"

using namespace hopflab;

namespace {

double kappa_ref(double a) { return std::min({a / 4, a * std::pow(0.125, a + 1), 1 - std::pow(8.0, -a)}); }

// closed form of the grid bound at a fixed q
double xi_at(int m, long k, int q) {
    long ell = 0;
    for (long p = q; p <= k; p *= q) ++ell;
    return std::pow(q, -m) * kappa_ref(critical_alpha(m)) / (4.0 * q) * ell;
}

}  // namespace

TEST_CASE("partition bound is the sum") {
    CHECK(partition_lower_bound({0, 0, 0}) == 0);
    CHECK(partition_lower_bound({1.5, 2.5}) == 4.0);
}

TEST_CASE("decomposition bound") {
    CHECK(decomposition_lower_bound(1, 2, 0.5, 10, 0, 0.5) == doctest::Approx(3));
    double v = decomposition_lower_bound(0, 0, 1, 16, 0.25, 0.5);
    CHECK(v == doctest::Approx(kappa_ref(0.5) * 4 * 0.25));
    CHECK(v == doctest::Approx(0.02210).epsilon(1e-3));
    CHECK(decomposition_lower_bound(1, 1, 0.5, 4, 0.1, 0.5) > partition_lower_bound({1, 1}));
}

TEST_CASE("one step of the grid recursion") {
    for (int m = 2; m <= 4; ++m) {
        double a = critical_alpha(m);
        CHECK(crazy_step(0.3, m, a, 5) == doctest::Approx(0.3 + kappa_ref(a) / 20));
    }
    CHECK(crazy_step(0, 2, 0.5, 4) == doctest::Approx(kappa_ref(0.5) / 16));
    CHECK(crazy_step(0, 2, 0.5, 4) == doctest::Approx(1.3811e-3).epsilon(1e-3));
    double x = 0;
    for (int i = 0; i < 7; ++i) x = crazy_step(x, 3, critical_alpha(3), 6);
    CHECK(x == doctest::Approx(7 * kappa_ref(2.0 / 3) / 24));
    CHECK_THROWS_AS(crazy_step(0, 2, 0.5, 3), InputError);
}

TEST_CASE("grid lower bound closed forms") {
    CHECK(grid_lower_bound({2, 1, 0}).xi == 0);
    CHECK(grid_lower_bound({2, 1, 0}).lambda == 0);
    auto b = grid_lower_bound({2, 16, 4});
    CHECK(b.xi == doctest::Approx(xi_at(2, 16, 4)));
    CHECK(b.xi == doctest::Approx(1.7264e-4).epsilon(1e-3));
    CHECK(b.lambda == doctest::Approx(b.xi * 16));
    CHECK(grid_lower_bound({2, 4096, 4}).xi / b.xi == doctest::Approx(3));
}

TEST_CASE("grid lower bound searches q and grows without bound") {
    for (int m = 2; m <= 4; ++m) {
        double prev = 0;
        for (long k = 1; k <= 5000; k = k * 3 + 1) {
            auto g = grid_lower_bound({m, k, 0});
            double best = 0;
            for (int q = 4; q <= 16; ++q) best = std::max(best, xi_at(m, k, q));
            CHECK(g.xi == doctest::Approx(best));
            CHECK(g.xi >= prev);
            prev = g.xi;
        }
    }
    double small = grid_lower_bound({2, 4, 4}).xi;
    CHECK(grid_lower_bound({2, 1L << 40, 4}).xi > 19 * small);
}

TEST_CASE("flux bound of a single point is its depth") {
    BoxDomain sq = BoxDomain::unit(2);
    CHECK(flux_lower_bound({{0.5, 0.5}}, sq, CostModel::power_law(0.5)) == doctest::Approx(0.5));
    CHECK(flux_lower_bound({}, sq, CostModel::power_law(0.5)) == 0);
}

TEST_CASE("charged combinator") {
    ChargedConfig c;
    c.positives = {{0.2, 0.2}, {0.3, 0.3}};
    c.negatives = {{0.8, 0.8}};
    CHECK(charged_lower_bound(c, {}, {}) == 0);
    BoxDomain b(2, {0.1, 0.1}, {0.4, 0.4});
    CHECK(charged_lower_bound(c, {b}, {0.7}) == 0.7);
    CHECK_THROWS_AS(charged_lower_bound(c, {BoxDomain(2, {0.5, 0.5}, {0.9, 0.9})}, {1.0}), InputError);
    CHECK_THROWS_AS(charged_lower_bound(c, {b, b}, {1.0, 1.0}), InputError);
}

TEST_CASE("charged combinator with a grid bound on one box") {
    UniformGridSpec spec{2, 4, 0.4, {0.1, 0.1}};
    ChargedConfig c;
    c.positives = grid_points(spec);
    c.negatives = {{0.9, 0.9}};
    BoxDomain box = spec.box();
    double g = grid_lower_bound({2, 4, 0}).lambda * 0.4;
    CHECK(charged_lower_bound(c, {box}, {g}) == doctest::Approx(g));
}

TEST_CASE("scaling consistency flags violations") {
    CHECK(scaling_consistency({{1, 1.0}, {2, 2.0}, {4, 4.0}}).empty());
    auto v = scaling_consistency({{1, 1.0}, {2, 0.1}});
    REQUIRE(v.size() == 1);
    CHECK(v[0].k_small == 1);
    CHECK(v[0].k_large == 2);
}

TEST_CASE("per-cell oracle values stay below the full oracle") {
    auto model = CostModel::power_law(0.5);
    SolveOptions opt;
    opt.resolution = 9;
    std::vector<Point> pts{{0.375, 0.375}, {0.625, 0.375}, {0.375, 0.625}};
    double full = oracle_exact(pts, BoxDomain::unit(2), model, opt);
    double sum = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            BoxDomain cell(2, {0.5 * i, 0.5 * j}, {0.5 * i + 0.5, 0.5 * j + 0.5});
            std::vector<Point> in;
            for (const auto& p : pts)
                if (cell.contains(p)) in.push_back(p);
            sum += in.empty() ? 0.0 : oracle_exact(in, cell, model, opt);
        }
    CHECK(sum <= full + 1e-12);
    CHECK(sum > 0);
}

TEST_CASE("decomposition bound stays below the oracle") {
    auto model = CostModel::power_law(0.5);
    SolveOptions opt;
    opt.resolution = 9;
    std::vector<Point> pts{{0.375, 0.5}, {0.625, 0.5}};
    BoxDomain inner(2, {0.25, 0.25}, {0.75, 0.75});
    double L1 = oracle_exact(pts, inner, model, opt);
    double lb = decomposition_lower_bound(L1, 0, 1, 2, box_gap(inner, BoxDomain::unit(2)), 0.5);
    CHECK(lb <= oracle_exact(pts, BoxDomain::unit(2), model, opt) + 1e-12);
}
