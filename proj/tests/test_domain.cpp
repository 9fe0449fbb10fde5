#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "hopflab/domain.hpp"
#include "hopflab/errors.hpp"

using namespace hopflab;

TEST_CASE("grid points in one dimension") {
    auto pts = grid_points({1, 2, 1.0, {}});
    REQUIRE(pts.size() == 2);
    CHECK(pts[0][0] == doctest::Approx(0.5));
    CHECK(pts[1][0] == doctest::Approx(1.0));
}

TEST_CASE("single grid point sits at the far corner") {
    auto pts = grid_points({2, 1, 1.0, {}});
    REQUIRE(pts.size() == 1);
    CHECK(pts[0][0] == 1.0);
    CHECK(pts[0][1] == 1.0);
}

TEST_CASE("grid geometry m=3 k=4") {
    auto pts = grid_points({3, 4, 1.0, {}});
    REQUIRE(pts.size() == 64);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, distance(pts[i], pts[j]));
    CHECK(best == doctest::Approx(0.25));
}

TEST_CASE("grid count and lexicographic order") {
    for (int m = 1; m <= 4; ++m)
        for (int k = 1; k <= 5; ++k) {
            auto pts = grid_points({m, k, 1.0, {}});
            CHECK(pts.size() == static_cast<std::size_t>(std::llround(std::pow(k, m))));
            for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i - 1] < pts[i]);
        }
}

TEST_CASE("boundary flags mark the far layer") {
    UniformGridSpec spec{2, 5, 1.0, {}};
    auto pts = grid_points(spec);
    auto flags = grid_boundary_flags(spec);
    BoxDomain box = BoxDomain::unit(2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (flags[i]) {
            CHECK(box.on_boundary(pts[i]));
        } else {
            CHECK(dist_to_boundary(pts[i], box) >= spec.spacing() - 1e-12);
        }
    }
}

TEST_CASE("distance to the boundary") {
    BoxDomain sq = BoxDomain::unit(2);
    CHECK(dist_to_boundary({0.5, 0.5}, sq) == doctest::Approx(0.5));
    CHECK(dist_to_boundary({1, 1}, sq) == 0.0);
    CHECK(dist_to_boundary({0.25, 0.5}, sq) == doctest::Approx(0.25));
    CHECK_THROWS_AS(dist_to_boundary({1.5, 0.5}, sq), InputError);
}

TEST_CASE("nearest boundary point prefers the lowest axis") {
    BoxDomain sq = BoxDomain::unit(2);
    Point p = sq.nearest_boundary_point({0.5, 0.5});
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.5);
    Point q = sq.nearest_boundary_point({0.9, 0.2});
    CHECK(q[0] == 1.0);
}

TEST_CASE("carve partitions the volume") {
    BoxDomain box(3, {0, 0, 0}, {2, 1, 3});
    BoxDomain inner(3, {0.5, 0.25, 1}, {1.5, 0.5, 2});
    BoxPartition part = carve(box, inner);
    REQUIRE(part.parts.size() == 2);
    double v = part.parts[0].volume() + part.parts[1].volume();
    CHECK(std::abs(v - box.volume()) / box.volume() < 1e-12);
    CHECK(part.inner_distance == doctest::Approx(0.25));
    CHECK_THROWS_AS(carve(box, BoxDomain(3, {0, 0, 0}, {1, 1, 1})), InputError);
}

TEST_CASE("bad boxes are rejected") {
    CHECK_THROWS_AS(BoxDomain(2, {0, 0}, {0, 1}), InputError);
    CHECK_THROWS_AS(BoxDomain(5, {}, {}), InputError);
    CHECK_THROWS_AS(grid_points({2, 0, 1.0, {}}), InputError);
}

TEST_CASE("json round trip") {
    BoxDomain b(2, {-1, 0}, {1, 2});
    nlohmann::json j = b;
    CHECK(j["dim"] == 2);
    CHECK(j.get<BoxDomain>() == b);
    UniformGridSpec s{3, 4, 2.0, {0.1, 0.2, 0.3}};
    nlohmann::json js = s;
    auto back = js.get<UniformGridSpec>();
    CHECK(back.k == 4);
    CHECK(back.scale == 2.0);
    CHECK(back.offset[2] == doctest::Approx(0.3));
    CHECK_THROWS_AS(nlohmann::json({{"dim", 2}}).get<BoxDomain>(), InputError);
}
