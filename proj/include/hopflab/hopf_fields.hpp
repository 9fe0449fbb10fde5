#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hopflab/curves_linking.hpp"

namespace hopflab {

inline constexpr Vec3 kNorth{0, 0, 1};
inline constexpr Vec3 kSouth{0, 0, -1};

// Worker threads for sampling and quadrature; 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

// chi_rho: disk of radius rho onto the sphere, centre to the north pole, rim to the south pole
struct DiskProfile {
    static double f(double r);  // sin(pi r) / r, extended by pi at 0
    static double g(double r);  // cos(pi r)
    static Vec3 chi(double x1, double x2, double rho);
};

// Closed skeleton with a per-vertex radius; the field is the south pole farther than `radius` from it.
struct Tube {
    std::vector<Vec3> path;
    std::vector<double> radius;
};

struct SphereField {
    std::string name;
    std::function<Vec3(const Vec3&)> eval;
    double support = 0;  // south pole beyond this radius; 0 when there is no compact support
    Vec3 box_lo{-1, -1, -1};
    Vec3 box_hi{1, 1, 1};
    std::vector<Tube> tubes;
    std::optional<long> k;
    std::optional<double> rho;

    Vec3 operator()(const Vec3& x) const;
};

// Largest admissible tube radius times 3: min of half the inter-curve distance and the polygon curvature radius.
double tube_separation(const std::vector<FramedCurve>& curves);

SphereField pontryagin_field(const std::vector<FramedCurve>& curves, double rho);
SphereField stadium_field(double rho = 1.0);
SphereField linked_stadia_field(double rho = 0.3);
SphereField spaghetton_field(int k);
SphereField hopf_map_field();
SphereField constant_field(const Vec3& v, double extent = 1.0);
SphereField dilate(const SphereField& f, double r);

enum class GadgetVariant { plus, minus, boundary4d };

Vec3 gadget_plus(double rho, double r, const Vec3& x);
Vec3 gadget_minus(double rho, double r, const Vec3& x);
Vec3 gadget_boundary(double rho, double r, const Vec4& x);  // x on the boundary of the 4-cube
SphereField gadget_field(double rho, double r, GadgetVariant v);
// Boundary field seen through a chart; its tubes follow the charted curves.
SphereField gadget_chart_field(double rho, double r, const BoundaryChart& chart);

struct EnergyResult {
    double value = 0;
    double sup_gradient = 0;
    long cells = 0;
};

EnergyResult energy_p(const SphereField& field, double p, int resolution);

struct RegularValue {
    Vec3 M, W1, W2;  // (W1, W2, M) direct orthonormal
    static RegularValue from(const Vec3& M);
};

std::pair<RegularValue, RegularValue> regular_value_pair(int index);

std::vector<Polyline3> extract_preimage(const SphereField& field, const Vec3& M, int resolution);

struct HopfResult {
    long value = 0;
    double raw = 0;
    int pair_index = 0;
    std::vector<Polyline3> first, second;
};

HopfResult hopf_preimage(const SphereField& field, int resolution, int pair_index = 0);

struct SampledField {
    int n = 0;
    Vec3 lo{};
    double h = 0;  // periodic box of side n h
    std::vector<Vec3> u;

    const Vec3& at(int i, int j, int k) const { return u[(static_cast<std::size_t>(i) * n + j) * n + k]; }
};

SampledField sample_field(const SphereField& field, int n, const Vec3& lo, double side);
double hopf_whitehead(const SampledField& s);

struct Disk {
    Vec3 center{};
    Vec3 normal{0, 0, 1};
    double radius = 1;
};

struct FluxResult {
    double raw = 0;
    double count = 0;  // raw / 4 pi
};

FluxResult fiber_flux(const SphereField& field, const Disk& disk, int resolution);

}  // namespace hopflab
