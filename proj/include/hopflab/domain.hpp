#pragma once

#include <array>
#include <vector>

#include <json.hpp>

namespace hopflab {

constexpr int kMaxDim = 4;

// Points carry 4 slots; coordinates past the dimension stay 0.
using Point = std::array<double, kMaxDim>;

constexpr double kVertexTol = 1e-9;

double distance(const Point& a, const Point& b);
Point lerp(const Point& a, const Point& b, double t);

struct BoxDomain {
    int dim = 0;
    Point lo{};
    Point hi{};

    BoxDomain() = default;
    BoxDomain(int dim, const Point& lo, const Point& hi);

    static BoxDomain unit(int dim);

    double volume() const;
    Point center() const;
    double diameter() const;
    bool contains(const Point& p, double tol = kVertexTol) const;
    bool strictly_contains(const BoxDomain& inner) const;
    bool on_boundary(const Point& p, double tol = kVertexTol) const;
    // closest point of the boundary; ties go to the lowest axis, lo face first
    Point nearest_boundary_point(const Point& p) const;

    bool operator==(const BoxDomain&) const = default;
};

double dist_to_boundary(const Point& p, const BoxDomain& box);

// distance from the closed box `inner` to the boundary of `outer`
double box_gap(const BoxDomain& inner, const BoxDomain& outer);

struct UniformGridSpec {
    int dim = 1;
    int k = 1;
    double scale = 1.0;
    Point offset{};

    double spacing() const { return scale / k; }
    BoxDomain box() const;
};

// h*I for I in {1..k}^m, last axis fastest
std::vector<Point> grid_points(const UniformGridSpec& spec);

// true where some index equals k, i.e. the point sits on the far faces
std::vector<bool> grid_boundary_flags(const UniformGridSpec& spec);

// A union of interior-disjoint boxes.
struct Region {
    std::vector<BoxDomain> boxes;
    double volume() const;
};

struct BoxPartition {
    BoxDomain parent;
    std::vector<Region> parts;  // parts[0] is the carved box, parts[1] its complement
    double inner_distance = 0;
};

BoxPartition carve(const BoxDomain& box, const BoxDomain& inner);

void to_json(nlohmann::json& j, const BoxDomain& b);
void from_json(const nlohmann::json& j, BoxDomain& b);
void to_json(nlohmann::json& j, const UniformGridSpec& s);
void from_json(const nlohmann::json& j, UniformGridSpec& s);

nlohmann::json point_to_json(const Point& p, int dim);
Point point_from_json(const nlohmann::json& j, int dim);

}  // namespace hopflab
