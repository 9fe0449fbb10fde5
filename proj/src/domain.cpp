#include "hopflab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hopflab/errors.hpp"

namespace hopflab {

double distance(const Point& a, const Point& b) {
    double s = 0;
    for (int i = 0; i < kMaxDim; ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

Point lerp(const Point& a, const Point& b, double t) {
    Point r{};
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
}

BoxDomain::BoxDomain(int dim_, const Point& lo_, const Point& hi_) : dim(dim_), lo(lo_), hi(hi_) {
    if (dim < 1 || dim > kMaxDim) throw InputError("box dimension must be in 1..4, got " + std::to_string(dim));
    for (int i = 0; i < dim; ++i) {
        if (!(lo[i] < hi[i])) throw InputError("box needs lo < hi on every axis");
    }
    for (int i = dim; i < kMaxDim; ++i) lo[i] = hi[i] = 0;
}

BoxDomain BoxDomain::unit(int dim) {
    Point hi{};
    for (int i = 0; i < dim && i < kMaxDim; ++i) hi[i] = 1.0;
    return BoxDomain(dim, Point{}, hi);
}

double BoxDomain::volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
    return v;
}

Point BoxDomain::center() const {
    Point c{};
    for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
}

double BoxDomain::diameter() const { return distance(lo, hi); }

bool BoxDomain::contains(const Point& p, double tol) const {
    for (int i = 0; i < dim; ++i) {
        if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
    }
    return true;
}

bool BoxDomain::strictly_contains(const BoxDomain& inner) const {
    if (inner.dim != dim) return false;
    for (int i = 0; i < dim; ++i) {
        if (!(inner.lo[i] > lo[i] && inner.hi[i] < hi[i])) return false;
    }
    return true;
}

bool BoxDomain::on_boundary(const Point& p, double tol) const {
    if (!contains(p, tol)) return false;
    for (int i = 0; i < dim; ++i) {
        if (std::abs(p[i] - lo[i]) <= tol || std::abs(p[i] - hi[i]) <= tol) return true;
    }
    return false;
}

Point BoxDomain::nearest_boundary_point(const Point& p) const {
    double best = std::numeric_limits<double>::infinity();
    int axis = 0;
    bool upper = false;
    for (int i = 0; i < dim; ++i) {
        double a = p[i] - lo[i], b = hi[i] - p[i];
        if (a < best) { best = a; axis = i; upper = false; }
        if (b < best) { best = b; axis = i; upper = true; }
    }
    Point q = p;
    q[axis] = upper ? hi[axis] : lo[axis];
    return q;
}

double dist_to_boundary(const Point& p, const BoxDomain& box) {
    if (!box.contains(p, 0.0)) throw InputError("point lies outside the box");
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < box.dim; ++i) {
        best = std::min({best, p[i] - box.lo[i], box.hi[i] - p[i]});
    }
    return best;
}

double box_gap(const BoxDomain& inner, const BoxDomain& outer) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < outer.dim; ++i) {
        best = std::min({best, inner.lo[i] - outer.lo[i], outer.hi[i] - inner.hi[i]});
    }
    return std::max(best, 0.0);
}

BoxDomain UniformGridSpec::box() const {
    Point hi = offset;
    for (int i = 0; i < dim; ++i) hi[i] += scale;
    return BoxDomain(dim, offset, hi);
}

namespace {

void check_spec(const UniformGridSpec& s) {
    if (s.dim < 1 || s.dim > kMaxDim) throw InputError("grid dimension must be in 1..4");
    if (s.k < 1) throw InputError("grid needs k >= 1");
    if (!(s.scale > 0)) throw InputError("grid scale must be positive");
}

template <class F>
void for_each_index(int dim, int k, F&& f) {
    std::array<int, kMaxDim> idx{};
    for (int i = 0; i < dim; ++i) idx[i] = 1;
    while (true) {
        f(idx);
        int a = dim - 1;
        while (a >= 0 && idx[a] == k) {
            idx[a] = 1;
            --a;
        }
        if (a < 0) break;
        ++idx[a];
    }
}

}  // namespace

std::vector<Point> grid_points(const UniformGridSpec& spec) {
    check_spec(spec);
    std::vector<Point> out;
    double h = spec.spacing();
    for_each_index(spec.dim, spec.k, [&](const std::array<int, kMaxDim>& idx) {
        Point p{};
        for (int i = 0; i < spec.dim; ++i) p[i] = spec.offset[i] + h * idx[i];
        out.push_back(p);
    });
    return out;
}

std::vector<bool> grid_boundary_flags(const UniformGridSpec& spec) {
    check_spec(spec);
    std::vector<bool> out;
    for_each_index(spec.dim, spec.k, [&](const std::array<int, kMaxDim>& idx) {
        bool b = false;
        for (int i = 0; i < spec.dim; ++i) b = b || idx[i] == spec.k;
        out.push_back(b);
    });
    return out;
}

double Region::volume() const {
    double v = 0;
    for (const auto& b : boxes) v += b.volume();
    return v;
}

BoxPartition carve(const BoxDomain& box, const BoxDomain& inner) {
    if (!box.strictly_contains(inner)) throw InputError("carved box must lie strictly inside the parent");
    BoxPartition part;
    part.parent = box;
    part.parts.push_back(Region{{inner}});
    // slabs: along axis i, the pieces below and above `inner`, limited to inner's extent on earlier axes
    Region rest;
    BoxDomain core = box;
    for (int i = 0; i < box.dim; ++i) {
        BoxDomain below = core, above = core;
        below.hi[i] = inner.lo[i];
        above.lo[i] = inner.hi[i];
        rest.boxes.push_back(below);
        rest.boxes.push_back(above);
        core.lo[i] = inner.lo[i];
        core.hi[i] = inner.hi[i];
    }
    part.parts.push_back(rest);
    part.inner_distance = box_gap(inner, box);
    return part;
}

nlohmann::json point_to_json(const Point& p, int dim) {
    auto j = nlohmann::json::array();
    for (int i = 0; i < dim; ++i) j.push_back(p[i]);
    return j;
}

Point point_from_json(const nlohmann::json& j, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim) throw InputError("point has wrong arity");
    Point p{};
    for (int i = 0; i < dim; ++i) p[i] = j[i].get<double>();
    return p;
}

void to_json(nlohmann::json& j, const BoxDomain& b) {
    j = {{"dim", b.dim}, {"lo", point_to_json(b.lo, b.dim)}, {"hi", point_to_json(b.hi, b.dim)}};
}

void from_json(const nlohmann::json& j, BoxDomain& b) {
    try {
        int dim = j.at("dim").get<int>();
        if (dim < 1 || dim > kMaxDim) throw InputError("box dimension must be in 1..4");
        b = BoxDomain(dim, point_from_json(j.at("lo"), dim), point_from_json(j.at("hi"), dim));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad box json: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const UniformGridSpec& s) {
    j = {{"k", s.k}, {"dim", s.dim}, {"scale", s.scale}, {"offset", point_to_json(s.offset, s.dim)}};
}

void from_json(const nlohmann::json& j, UniformGridSpec& s) {
    try {
        s.k = j.at("k").get<int>();
        s.dim = j.at("dim").get<int>();
        if (s.dim < 1 || s.dim > kMaxDim) throw InputError("grid dimension must be in 1..4");
        s.scale = j.value("scale", 1.0);
        s.offset = j.contains("offset") ? point_from_json(j.at("offset"), s.dim) : Point{};
        check_spec(s);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad grid json: ") + e.what());
    }
}

}  // namespace hopflab
