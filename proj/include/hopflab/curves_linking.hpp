#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

namespace hopflab {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
// closest point on [a,b] to x, as parameter in [0,1]
double project_to_segment(const Vec3& x, const Vec3& a, const Vec3& b);

struct Polyline3 {
    std::vector<Vec3> vertices;
    bool closed = true;

    std::size_t segment_count() const { return closed ? vertices.size() : vertices.size() - 1; }
    const Vec3& at(std::size_t i) const { return vertices[i % vertices.size()]; }
    double length() const;
    void check() const;                  // vertex count and duplicate rules
    bool self_intersects(double tol = 1e-9) const;
    Polyline3 reversed() const;
    Polyline3 translated(const Vec3& t) const;
};

double min_distance(const Polyline3& a, const Polyline3& b);

// Frame vectors at each vertex; tau1 and tau2 normal to the tangent, (tau1, tau2, tangent) direct.
struct FramedCurve {
    Polyline3 curve;
    std::vector<Vec3> tau1;
    std::vector<Vec3> tau2;

    // Planar curve framed by the plane normal; the curve runs counter-clockwise around it.
    static FramedCurve reference(const Polyline3& c, const Vec3& plane_normal);
    Vec3 tangent(std::size_t i) const;  // averaged over adjacent segments
    void check() const;
};

double gauss_linking(const Polyline3& c1, const Polyline3& c2);
long crossing_linking(const Polyline3& c1, const Polyline3& c2, Vec3 direction = {0.3141, 0.2718, 0.9109});

// Stadium made of two segments and two tangent-polygon half circles.
// plane: 12 puts it in x3 = level (counter-clockwise in e1, e2), 23 in x1 = level (counter-clockwise in e2, e3).
struct StadiumSpec {
    int plane = 12;
    double level = 0;
    double a0 = -5, a1 = 5;   // segment extent along the first in-plane axis
    double b_center = 5;      // arc centres sit at (a0, b_center) and (a1, b_center)
    double radius = 5;
    int arc_steps = 32;       // edges per half circle
};

Polyline3 stadium(const StadiumSpec& s);
int arc_steps_for(double radius, double sagitta);

Polyline3 stadium_L0();
Polyline3 stadium_L0_perp();

struct SheafPair {
    int k = 1;
    std::vector<Polyline3> horizontal;     // (j, q) row major
    std::vector<Polyline3> perpendicular;  // (i, q) row major
    double intra_min_distance = 0;
    double inter_min_distance = 0;

    std::vector<FramedCurve> framed() const;
};

SheafPair build_sheaves(int k);
long total_linking(const SheafPair& pair);

struct GadgetProfile {
    double operator()(double s) const;  // even, 1/2 at 0, -3/4 on [1/2, 1]
    double slope(double s) const;
    double bend(double s) const;  // second derivative
};

struct Curve4 {
    std::vector<Vec4> vertices;  // closed
};

struct GadgetCurves {
    double r = 1;
    Curve4 L1;
    Curve4 L2;
};

GadgetCurves gadget_curves(double r, int samples = 64);

// Chart of the 4-cube boundary: radial map to the round 3-sphere, rotation taking `pole` to the
// north pole, then stereographic projection from it. The last chart axis is flipped so the
// boundary carries the outward-normal-last orientation.
class BoundaryChart {
public:
    BoundaryChart(double r, const Vec4& pole);
    double r() const { return r_; }
    const Vec4& pole() const { return pole_; }
    Vec3 to_chart(const Vec4& x) const;
    Vec4 from_chart(const Vec3& y) const;  // lands on the cube boundary

    static std::vector<Vec4> candidate_poles(double r);

private:
    double r_;
    Vec4 pole_;
    std::array<std::array<double, 4>, 4> rot_{};
};

Polyline3 project_boundary_to_R3(const Curve4& c, const BoundaryChart& chart);

nlohmann::json curve_to_json(const Polyline3& c);
Polyline3 curve_from_json(const nlohmann::json& j);

}  // namespace hopflab
