#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hopflab/curves_linking.hpp"
#include "hopflab/errors.hpp"

using namespace hopflab;

namespace {

constexpr double pi = std::numbers::pi;

Polyline3 circle(const Vec3& c, const Vec3& e1, const Vec3& e2, int n) {
    Polyline3 p;
    for (int i = 0; i < n; ++i) {
        double t = 2 * pi * i / n;
        p.vertices.push_back(c + std::cos(t) * e1 + std::sin(t) * e2);
    }
    return p;
}

// midpoint-rule Gauss double integral over smooth circles
double gauss_quadrature(const Vec3& c1, const Vec3& a1, const Vec3& b1, const Vec3& c2, const Vec3& a2,
                        const Vec3& b2, int n) {
    double s = 0, h = 2 * pi / n;
    for (int i = 0; i < n; ++i) {
        double t = (i + 0.5) * h;
        Vec3 x = c1 + std::cos(t) * a1 + std::sin(t) * b1, dx = -std::sin(t) * a1 + std::cos(t) * b1;
        for (int j = 0; j < n; ++j) {
            double u = (j + 0.5) * h;
            Vec3 y = c2 + std::cos(u) * a2 + std::sin(u) * b2, dy = -std::sin(u) * a2 + std::cos(u) * b2;
            Vec3 r = x - y;
            double d = norm(r);
            s += dot(r, cross(dx, dy)) / (d * d * d);
        }
    }
    return s * h * h / (4 * pi);
}

}  // namespace

TEST_CASE("two orthogonal circles link once") {
    auto c1 = circle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 400);
    auto c2 = circle({0, -1, 0}, {0, 1, 0}, {0, 0, 1}, 400);
    double ref = gauss_quadrature({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, 1}, 600);
    CHECK(std::lround(ref) == 1);
    CHECK(gauss_linking(c1, c2) == doctest::Approx(1).epsilon(1e-6));
    CHECK(crossing_linking(c1, c2) == 1);
    CHECK(gauss_linking(c1, c2.reversed()) == doctest::Approx(-1).epsilon(1e-6));
    CHECK(crossing_linking(c1, c2.reversed()) == -1);
    CHECK(gauss_linking(c2, c1) == doctest::Approx(gauss_linking(c1, c2)).epsilon(1e-12));
}

TEST_CASE("a curve and its translate do not link") {
    Polyline3 l0 = stadium_L0();
    auto t = l0.translated({0, 0, 0.5});
    CHECK(std::abs(gauss_linking(l0, t)) < 1e-6);
    CHECK(crossing_linking(l0, t) == 0);
}

TEST_CASE("close curves are rejected") {
    auto c1 = circle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 16);
    auto c2 = circle({0, -1, 0}, {0, 1, 0}, {0, 0, 1}, 16);
    c2.vertices[0] = c1.vertices[0];
    CHECK_THROWS_AS(gauss_linking(c1, c2), InputError);
}

TEST_CASE("gauss and crossing agree on random polygons") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1, 1);
    int linked = 0, done = 0;
    while (done < 500) {
        Polyline3 a, b;
        for (int i = 0; i < 7; ++i) a.vertices.push_back({U(rng), U(rng), U(rng)});
        for (int i = 0; i < 7; ++i) b.vertices.push_back({U(rng) + 0.5, U(rng), U(rng)});
        if (min_distance(a, b) < 1e-3) continue;
        double g = gauss_linking(a, b);
        long c = crossing_linking(a, b);
        CHECK(std::abs(g - std::lround(g)) < 1e-6);
        CHECK(std::lround(g) == c);
        CHECK(crossing_linking(b, a) == c);
        linked += c != 0;
        ++done;
    }
    CHECK(linked > 0);
}

TEST_CASE("linking is additive over components") {
    auto c1 = circle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 64);
    auto c2 = circle({0, -1, 0}, {0, 1, 0}, {0, 0, 1}, 64);
    auto c3 = circle({0, 1, 0}, {0, 1, 0}, {0, 0, 1}, 64);
    double sum = gauss_linking(c1, c2) + gauss_linking(c1, c3);
    CHECK(std::lround(sum) == 0);
    CHECK(std::lround(gauss_linking(c1, c3)) == -1);
}

TEST_CASE("reference frames") {
    auto f = FramedCurve::reference(stadium_L0(), {0, 0, 1});
    f.check();
    for (std::size_t i = 0; i < f.curve.vertices.size(); i += 7) {
        Vec3 t = f.tangent(i);
        CHECK(std::abs(dot(f.tau1[i], t)) < 1e-6);
        CHECK(dot(cross(f.tau1[i], f.tau2[i]), t) > 0.999);
    }
    CHECK_THROWS_AS(FramedCurve::reference(stadium_L0().reversed(), {0, 0, 1}), InputError);
}

TEST_CASE("stadium pair links once") {
    auto a = stadium_L0(), b = stadium_L0_perp();
    CHECK(gauss_linking(a, b) == doctest::Approx(1).epsilon(1e-6));
    CHECK(crossing_linking(a, b) == 1);
    CHECK_FALSE(a.self_intersects());
}

TEST_CASE("sheaves for k = 1 and 2") {
    auto s1 = build_sheaves(1);
    CHECK(s1.horizontal.size() == 1);
    CHECK(total_linking(s1) == 1);
    auto s2 = build_sheaves(2);
    CHECK(s2.horizontal.size() == 4);
    CHECK(s2.perpendicular.size() == 4);
    CHECK(s2.intra_min_distance >= 0.5 - 1e-9);
    for (const auto& h : s2.horizontal)
        for (const auto& p : s2.perpendicular) CHECK(std::lround(gauss_linking(h, p)) == 1);
    CHECK(total_linking(s2) == 16);
    CHECK(std::abs(s2.inter_min_distance - 1) < 1.25);
    CHECK_THROWS_AS(build_sheaves(9), InputError);
}

TEST_CASE("sheaves stay in the ball and avoid each other") {
    auto s = build_sheaves(3);
    for (const auto& set : {s.horizontal, s.perpendicular})
        for (const auto& c : set)
            for (const auto& v : c.vertices) CHECK(norm(v) < 17);
    CHECK(s.intra_min_distance >= 1.0 / 3 - 1e-9);
    CHECK(s.inter_min_distance > 0);
}

TEST_CASE("gadget curves link once through every chart") {
    auto g = gadget_curves(1.0, 64);
    for (const auto& pole : BoundaryChart::candidate_poles(1.0)) {
        BoundaryChart ch(1.0, pole);
        auto a = project_boundary_to_R3(g.L1, ch), b = project_boundary_to_R3(g.L2, ch);
        CHECK(gauss_linking(a, b) == doctest::Approx(1).epsilon(1e-6));
        CHECK(crossing_linking(a, b) == 1);
        CHECK(std::abs(gauss_linking(a, a.translated({0, 0, 0.02})) ) < 1e-6);
    }
}

TEST_CASE("gadget curves lie on the cube boundary") {
    auto g = gadget_curves(2.0, 16);
    for (const auto* c : {&g.L1, &g.L2})
        for (const auto& v : c->vertices) {
            double m = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), std::abs(v[3])});
            CHECK(m == doctest::Approx(2.0));
        }
    GadgetProfile p;
    CHECK(p(0) == 0.5);
    CHECK(p(0.75) == -0.75);
    CHECK(p(-0.3) == p(0.3));
    CHECK(p.slope(0.2) == doctest::Approx((p(0.2 + 1e-6) - p(0.2 - 1e-6)) / 2e-6).epsilon(1e-6));
}

TEST_CASE("chart round trip") {
    BoundaryChart ch(1.5, BoundaryChart::candidate_poles(1.5)[2]);
    for (Vec3 y : {Vec3{0.1, 0.2, -0.3}, Vec3{2, -1, 0.5}, Vec3{0, 0, 0}}) {
        Vec4 x = ch.from_chart(y);
        Vec3 back = ch.to_chart(x);
        CHECK(norm(back - y) < 1e-12);
    }
    Curve4 near;
    near.vertices = {{1.5, 1.5, 1.5, 1.5}, {1.5, -1.5, 1.5, 1.5}, {-1.5, 1.5, 1.5, 1.5}};
    CHECK_THROWS_AS(project_boundary_to_R3(near, BoundaryChart(1.5, {1.5, 1.5, 1.5, 1.5})), InputError);
}

TEST_CASE("curve json") {
    auto c = stadium_L0();
    auto back = curve_from_json(curve_to_json(c));
    CHECK(back.vertices.size() == c.vertices.size());
    CHECK(norm(back.vertices[3] - c.vertices[3]) == 0);
    CHECK_THROWS_AS(curve_from_json(nlohmann::json::parse(R"({"closed":true,"vertices":[[0,0,0],[1,0,0]]})")),
                    InputError);
}
