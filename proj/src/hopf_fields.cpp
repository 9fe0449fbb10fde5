#include "hopflab/hopf_fields.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <fftw3.h>

#include "hopflab/errors.hpp"

namespace hopflab {

namespace {

constexpr double kPi = std::numbers::pi;
std::atomic<int> g_threads{0};

template <class F>
void parallel_for(std::size_t n, F&& f) {
    std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i; (i = next++) < n;) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

double sgn(double v) { return v >= 0 ? 1.0 : -1.0; }

Vec3 rotate_about(const Vec3& v, const Vec3& axis, double ang) {
    // v assumed orthogonal to the unit axis
    return std::cos(ang) * v + std::sin(ang) * cross(axis, v);
}

Vec3 any_normal(const Vec3& t) {
    Vec3 h = std::abs(t[0]) < 0.8 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return normalized(cross(t, h));
}

}  // namespace

void set_thread_count(int n) { g_threads = std::max(0, n); }

int thread_count() {
    int n = g_threads;
    if (n > 0) return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

double DiskProfile::f(double r) { return r == 0 ? kPi : std::sin(kPi * r) / r; }
double DiskProfile::g(double r) { return std::cos(kPi * r); }

Vec3 DiskProfile::chi(double x1, double x2, double rho) {
    double l = std::hypot(x1, x2);
    double r = l / rho;
    if (r >= 1) return kSouth;
    if (l == 0) return kNorth;
    double s = std::sin(kPi * r);
    return {x1 / l * s, x2 / l * s, std::cos(kPi * r)};
}

Vec3 SphereField::operator()(const Vec3& x) const {
    if (support > 0 && norm(x) > support) return kSouth;
    return eval(x);
}

// ---------------------------------------------------------------- curve index

namespace {

struct Hit {
    int curve = -1;
    std::size_t seg = 0;
    double t = 0;
    double dist = 0;
};

class CurveIndex {
public:
    CurveIndex(std::vector<Polyline3> curves, double reach) : curves_(std::move(curves)), reach_(reach) {
        double total = 0;
        std::size_t segs = 0;
        for (const auto& c : curves_) {
            total += c.length();
            segs += c.segment_count();
        }
        cell_ = std::max(2 * reach_, 0.5 * total / std::max<std::size_t>(segs, 1));
        for (std::size_t ci = 0; ci < curves_.size(); ++ci) {
            const auto& c = curves_[ci];
            for (std::size_t s = 0; s < c.segment_count(); ++s) {
                Vec3 a = c.at(s), b = c.at(s + 1);
                long lo[3], hi[3];
                for (int d = 0; d < 3; ++d) {
                    lo[d] = cell_of(std::min(a[d], b[d]) - reach_);
                    hi[d] = cell_of(std::max(a[d], b[d]) + reach_);
                }
                for (long x = lo[0]; x <= hi[0]; ++x)
                    for (long y = lo[1]; y <= hi[1]; ++y)
                        for (long z = lo[2]; z <= hi[2]; ++z)
                            grid_[key(x, y, z)].push_back({static_cast<int>(ci), s});
            }
        }
    }

    // nearest curve point closer than reach
    std::optional<Hit> nearest(const Vec3& x) const {
        auto it = grid_.find(key(cell_of(x[0]), cell_of(x[1]), cell_of(x[2])));
        if (it == grid_.end()) return std::nullopt;
        Hit best;
        best.dist = reach_;
        for (const auto& [ci, s] : it->second) {
            const auto& c = curves_[ci];
            const Vec3 &a = c.at(s), &b = c.at(s + 1);
            double t = project_to_segment(x, a, b);
            double d = norm(x - (a + t * (b - a)));
            if (d < best.dist) best = {ci, s, t, d};
        }
        if (best.curve < 0) return std::nullopt;
        return best;
    }

    const std::vector<Polyline3>& curves() const { return curves_; }

private:
    struct Ref {
        int curve;
        std::size_t seg;
    };
    long cell_of(double v) const { return static_cast<long>(std::floor(v / cell_)); }
    static long long key(long x, long y, long z) {
        return ((static_cast<long long>(x) + (1 << 20)) << 42) | ((static_cast<long long>(y) + (1 << 20)) << 21) |
               (static_cast<long long>(z) + (1 << 20));
    }

    std::vector<Polyline3> curves_;
    double reach_;
    double cell_ = 1;
    std::unordered_map<long long, std::vector<Ref>> grid_;
};

double curvature_radius(const Polyline3& c) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t n = c.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 e0 = c.at(i) - c.at(i + n - 1), e1 = c.at(i + 1) - c.at(i);
        double l0 = norm(e0), l1 = norm(e1);
        double cosang = std::clamp(dot(e0, e1) / (l0 * l1), -1.0, 1.0);
        double phi = std::acos(cosang);
        if (phi < 1e-12) continue;
        best = std::min(best, std::min(l0, l1) / (2 * std::tan(phi / 2)));
    }
    return best;
}

void bounding_box(const std::vector<Polyline3>& cs, double pad, Vec3& lo, Vec3& hi) {
    lo = {1e300, 1e300, 1e300};
    hi = {-1e300, -1e300, -1e300};
    for (const auto& c : cs)
        for (const auto& v : c.vertices)
            for (int d = 0; d < 3; ++d) {
                lo[d] = std::min(lo[d], v[d] - pad);
                hi[d] = std::max(hi[d], v[d] + pad);
            }
}

constexpr double kTubeCover = 1.37;  // mesh radius over rho for Pontryagin tubes

}  // namespace

double tube_separation(const std::vector<FramedCurve>& curves) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < curves.size(); ++a) {
        best = std::min(best, curvature_radius(curves[a].curve));
        for (std::size_t b = a + 1; b < curves.size(); ++b)
            best = std::min(best, 0.5 * min_distance(curves[a].curve, curves[b].curve));
    }
    return best;
}

SphereField pontryagin_field(const std::vector<FramedCurve>& curves, double rho) {
    if (curves.empty()) throw InputError("Pontryagin field needs at least one curve");
    if (!(rho > 0)) throw InputError("tube radius must be positive");
    for (const auto& c : curves) c.check();
    double sep = tube_separation(curves);
    if (rho > sep / 3) throw InputError("tube overlap: rho exceeds a third of the tube separation");
    std::vector<Polyline3> polys;
    for (const auto& c : curves) polys.push_back(c.curve);
    auto index = std::make_shared<const CurveIndex>(polys, rho);
    auto framed = std::make_shared<const std::vector<FramedCurve>>(curves);
    SphereField f;
    f.name = "pontryagin";
    f.rho = rho;
    f.eval = [index, framed, rho](const Vec3& x) -> Vec3 {
        auto hit = index->nearest(x);
        if (!hit) return kSouth;
        const FramedCurve& fc = (*framed)[hit->curve];
        std::size_t n = fc.curve.vertices.size();
        std::size_t i = hit->seg, j = (hit->seg + 1) % n;
        const Vec3 &a = fc.curve.vertices[i], &b = fc.curve.vertices[j];
        Vec3 p = a + hit->t * (b - a);
        Vec3 t1, t2;
        if (hit->t <= 0) {
            t1 = fc.tau1[i];
            t2 = fc.tau2[i];
        } else if (hit->t >= 1) {
            t1 = fc.tau1[j];
            t2 = fc.tau2[j];
        } else {
            Vec3 T = normalized(b - a);
            Vec3 m = (1 - hit->t) * fc.tau1[i] + hit->t * fc.tau1[j];
            t1 = normalized(m - dot(m, T) * T);
            t2 = cross(T, t1);
        }
        Vec3 d = x - p;
        double x1 = dot(d, t1);
        double x2 = sgn(dot(d, t2)) * std::sqrt(std::max(0.0, dot(d, d) - x1 * x1));
        return DiskProfile::chi(x1, x2, rho);
    };
    double far = 0;
    for (const auto& c : polys)
        for (const auto& v : c.vertices) far = std::max(far, norm(v));
    f.support = far + rho;
    bounding_box(polys, 2 * rho + 0.5, f.box_lo, f.box_hi);
    for (const auto& c : polys) f.tubes.push_back({c.vertices, std::vector<double>(c.vertices.size(), kTubeCover * rho)});
    return f;
}

SphereField stadium_field(double rho) {
    SphereField f = pontryagin_field({FramedCurve::reference(stadium_L0(), {0, 0, 1})}, rho);
    f.name = "stadium";
    return f;
}

SphereField linked_stadia_field(double rho) {
    SphereField f = pontryagin_field(
        {FramedCurve::reference(stadium_L0(), {0, 0, 1}), FramedCurve::reference(stadium_L0_perp(), {1, 0, 0})}, rho);
    f.name = "linked-stadia";
    return f;
}

SphereField spaghetton_field(int k) {
    if (k < 1 || k > 4) throw InputError("spaghetton needs 1 <= k <= 4");
    SheafPair s = build_sheaves(k);
    SphereField f = pontryagin_field(s.framed(), 1.0 / (3000.0 * k));
    f.name = "spaghetton";
    f.k = k;
    f.support = 17;
    return f;
}

SphereField hopf_map_field() {
    SphereField f;
    f.name = "hopfmap";
    f.eval = [](const Vec3& x) -> Vec3 {
        double n2 = dot(x, x), den = n2 + 1;
        double X0 = 2 * x[0] / den, X1 = 2 * x[1] / den, X2 = 2 * x[2] / den, X3 = (n2 - 1) / den;
        // z1 = X0 + i X1, z2 = X2 + i X3; value (z1 conj z2, |z1|^2 - |z2|^2) read in real coordinates
        double re = X0 * X2 + X1 * X3, im = X1 * X2 - X0 * X3;
        Vec3 u{2 * im, 2 * re, X0 * X0 + X1 * X1 - X2 * X2 - X3 * X3};
        return normalized(u);
    };
    f.box_lo = {-4, -4, -4};
    f.box_hi = {4, 4, 4};
    return f;
}

SphereField constant_field(const Vec3& v, double extent) {
    if (std::abs(norm(v) - 1) > 1e-12) throw InputError("constant field value must be a unit vector");
    SphereField f;
    f.name = "constant";
    f.eval = [v](const Vec3&) { return v; };
    f.box_lo = {-extent, -extent, -extent};
    f.box_hi = {extent, extent, extent};
    return f;
}

SphereField dilate(const SphereField& f, double r) {
    if (!(r > 0)) throw InputError("dilation factor must be positive");
    SphereField g = f;
    auto inner = f.eval;
    g.eval = [inner, r](const Vec3& x) { return inner((1.0 / r) * x); };
    g.support = f.support * r;
    g.box_lo = r * f.box_lo;
    g.box_hi = r * f.box_hi;
    for (auto& t : g.tubes) {
        for (auto& p : t.path) p = r * p;
        for (auto& q : t.radius) q *= r;
    }
    if (g.rho) g.rho = *g.rho * r;
    g.name = f.name + "-dilated";
    return g;
}

// ---------------------------------------------------------------- gadget

namespace {

void gadget_guard(double rho, double r) {
    if (!(r > 0)) throw InputError("gadget needs r > 0");
    if (!(rho > 0) || rho > 1e-2 * r) throw InputError("gadget needs 0 < rho <= r/100");
}

std::optional<Vec3> segment_tube(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& t1, const Vec3& t2,
                                 double rho) {
    double t = project_to_segment(x, a, b);
    Vec3 d = x - (a + t * (b - a));
    double l2 = dot(d, d);
    if (l2 >= rho * rho) return std::nullopt;
    double x1 = dot(d, t1);
    double x2 = sgn(dot(d, t2)) * std::sqrt(std::max(0.0, l2 - x1 * x1));
    return DiskProfile::chi(x1, x2, rho);
}

std::optional<Vec3> d0_tube(double rho, double r, const Vec3& x) {
    return segment_tube(x, {-r, 0, r / 4}, {r, 0, r / 4}, {0, 0, 1}, {0, -1, 0}, rho);
}

}  // namespace

Vec3 gadget_plus(double rho, double r, const Vec3& x) {
    if (auto v = d0_tube(rho, r, x)) return *v;
    if (auto v = segment_tube(x, {0, -r, -0.75 * r}, {0, r, -0.75 * r}, {1, 0, 0}, {0, 0, -1}, rho)) return *v;
    return kSouth;
}

Vec3 gadget_minus(double rho, double r, const Vec3& x) {
    if (auto v = d0_tube(rho, r, x)) return *v;
    if (std::abs(x[0]) >= rho) return kSouth;
    GadgetProfile g;
    // nearest point of the graph z = r g(y / r) in the (y, z) plane
    double s = std::clamp(x[1] / r, -1.0, 1.0);
    if (std::abs(x[2] - r * g(s)) > 8 * rho) return kSouth;
    for (int it = 0; it < 30; ++it) {
        double dy = x[1] - r * s, dz = x[2] - r * g(s), gs = g.slope(s);
        double d1 = -r * dy - r * gs * dz;
        double d2 = r * r * (1 + gs * gs) - r * g.bend(s) * dz;
        double step = d2 > 0 ? d1 / d2 : d1 / (r * r);
        s = std::clamp(s - step, -1.0, 1.0);
        if (std::abs(step) < 1e-15) break;
    }
    double gs = g.slope(s);
    double y2 = -((x[2] - r * g(s)) - gs * (x[1] - r * s)) / std::sqrt(1 + gs * gs);
    if (x[0] * x[0] + y2 * y2 < rho * rho) return DiskProfile::chi(x[0], y2, rho);
    return kSouth;
}

Vec3 gadget_boundary(double rho, double r, const Vec4& x) {
    int idx = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(x[i]) > std::abs(x[idx])) idx = i;
    Vec3 y{x[0], x[1], x[2]};
    if (idx == 3 && x[3] < 0) return gadget_minus(rho, r, y);
    return gadget_plus(rho, r, y);
}

SphereField gadget_field(double rho, double r, GadgetVariant v) {
    gadget_guard(rho, r);
    if (v == GadgetVariant::boundary4d) return gadget_chart_field(rho, r, BoundaryChart(r, BoundaryChart::candidate_poles(r)[0]));
    SphereField f;
    f.name = v == GadgetVariant::plus ? "gadget-plus" : "gadget-minus";
    f.rho = rho;
    if (v == GadgetVariant::plus)
        f.eval = [rho, r](const Vec3& x) { return gadget_plus(rho, r, x); };
    else
        f.eval = [rho, r](const Vec3& x) { return gadget_minus(rho, r, x); };
    f.box_lo = {-r, -r, -r};
    f.box_hi = {r, r, r};
    return f;
}

namespace {

Vec4 to_cube(const Vec4& q, double r) {
    double m = std::max({std::abs(q[0]), std::abs(q[1]), std::abs(q[2]), std::abs(q[3])});
    return {q[0] * r / m, q[1] * r / m, q[2] * r / m, q[3] * r / m};
}

double chart_stretch(const BoundaryChart& ch, const Vec4& p) {
    double eps = 1e-5 * ch.r(), best = 0;
    Vec3 y = ch.to_chart(p);
    for (int j = 0; j < 4; ++j)
        for (double s : {-1.0, 1.0}) {
            Vec4 q = p;
            q[j] += s * eps;
            q = to_cube(q, ch.r());
            double d4 = 0;
            for (int m = 0; m < 4; ++m) d4 += (q[m] - p[m]) * (q[m] - p[m]);
            d4 = std::sqrt(d4);
            if (d4 < 1e-3 * eps) continue;
            best = std::max(best, norm(ch.to_chart(q) - y) / d4);
        }
    return best;
}

// Replace sharp corners by circular arcs of radius `grow` times the local tube radius.
Tube fillet_corners(const Tube& in, double angle, double grow) {
    std::size_t n = in.path.size();
    std::vector<bool> corner(n, false), drop(n, false);
    std::vector<double> reach(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 a = normalized(in.path[i] - in.path[(i + n - 1) % n]), b = normalized(in.path[(i + 1) % n] - in.path[i]);
        double phi = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
        if (phi > angle) {
            corner[i] = true;
            reach[i] = grow * in.radius[i] * std::tan(phi / 2);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!corner[i]) continue;
        for (std::size_t s = 1; s < n / 2; ++s) {
            std::size_t j = (i + n - s) % n;
            if (norm(in.path[j] - in.path[i]) >= reach[i]) break;
            drop[j] = true;
        }
        for (std::size_t s = 1; s < n / 2; ++s) {
            std::size_t j = (i + s) % n;
            if (norm(in.path[j] - in.path[i]) >= reach[i]) break;
            drop[j] = true;
        }
    }
    Tube out;
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i] && !corner[i]) continue;
        if (!corner[i]) {
            out.path.push_back(in.path[i]);
            out.radius.push_back(in.radius[i]);
            continue;
        }
        const Vec3& c = in.path[i];
        Vec3 tin = normalized(c - in.path[(i + n - 1) % n]), tout = normalized(in.path[(i + 1) % n] - c);
        double phi = std::acos(std::clamp(dot(tin, tout), -1.0, 1.0));
        double rf = grow * in.radius[i];
        Vec3 A = c - reach[i] * tin;
        Vec3 nin = normalized(tout - dot(tout, tin) * tin);
        Vec3 O = A + rf * nin;
        int steps = std::max(4, static_cast<int>(std::ceil(phi / 0.15)));
        for (int s = 0; s <= steps; ++s) {
            double th = phi * s / steps;
            out.path.push_back(O + rf * (std::sin(th) * tin - std::cos(th) * nin));
            out.radius.push_back(in.radius[i]);
        }
    }
    return out;
}

}  // namespace

SphereField gadget_chart_field(double rho, double r, const BoundaryChart& chart) {
    gadget_guard(rho, r);
    if (std::abs(chart.r() - r) > 1e-12 * r) throw InputError("chart radius must match the gadget");
    GadgetCurves gc = gadget_curves(r, 96);
    SphereField f;
    f.name = "gadget";
    f.rho = rho;
    f.eval = [rho, r, chart](const Vec3& y) { return gadget_boundary(rho, r, chart.from_chart(y)); };
    f.box_lo = {1e300, 1e300, 1e300};
    f.box_hi = {-1e300, -1e300, -1e300};
    for (const Curve4* c : {&gc.L1, &gc.L2}) {
        Polyline3 p = project_boundary_to_R3(*c, chart);
        Tube t;
        t.path = p.vertices;
        for (const auto& v : c->vertices) t.radius.push_back(4 * rho * chart_stretch(chart, v));
        Tube ft = fillet_corners(t, 0.6, 1.1);
        for (std::size_t i = 0; i < ft.path.size(); ++i)
            for (int d = 0; d < 3; ++d) {
                f.box_lo[d] = std::min(f.box_lo[d], ft.path[i][d] - ft.radius[i]);
                f.box_hi[d] = std::max(f.box_hi[d], ft.path[i][d] + ft.radius[i]);
            }
        f.tubes.push_back(std::move(ft));
    }
    return f;
}

// ---------------------------------------------------------------- tube meshes

namespace {

struct TubeFrames {
    std::vector<Vec3> T, U, V;
};

TubeFrames tube_frames(const Tube& t) {
    std::size_t n = t.path.size();
    TubeFrames fr;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 a = normalized(t.path[i] - t.path[(i + n - 1) % n]), b = normalized(t.path[(i + 1) % n] - t.path[i]);
        fr.T.push_back(normalized(a + b));
    }
    // rotation minimizing transport by double reflection
    fr.U.resize(n + 1);
    fr.U[0] = any_normal(fr.T[0]);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& x0 = t.path[i];
        const Vec3& x1 = t.path[(i + 1) % n];
        const Vec3& t0 = fr.T[i];
        const Vec3& t1 = fr.T[(i + 1) % n];
        Vec3 v1 = x1 - x0;
        double c1 = dot(v1, v1);
        Vec3 rL = fr.U[i] - (2 / c1 * dot(v1, fr.U[i])) * v1;
        Vec3 tL = t0 - (2 / c1 * dot(v1, t0)) * v1;
        Vec3 v2 = t1 - tL;
        double c2 = dot(v2, v2);
        Vec3 r1 = c2 > 1e-300 ? rL - (2 / c2 * dot(v2, rL)) * v2 : rL;
        r1 = normalized(r1 - dot(r1, t1) * t1);
        fr.U[i + 1] = r1;
    }
    double close = std::atan2(dot(cross(fr.U[0], fr.U[n]), fr.T[0]), dot(fr.U[0], fr.U[n]));
    fr.U.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        fr.U[i] = rotate_about(fr.U[i], fr.T[i], -close * static_cast<double>(i) / n);
        fr.V.push_back(cross(fr.T[i], fr.U[i]));
    }
    return fr;
}

struct FaceKey {
    long long a, b, c;
    bool operator==(const FaceKey&) const = default;
};

struct FaceKeyHash {
    std::size_t operator()(const FaceKey& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.a) * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<std::uint64_t>(k.b) + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(k.c) + 0x94d049bb133111ebULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

struct Seg {
    FaceKey a, b;
    Vec3 pa, pb;
    double vote;  // > 0 when a -> b follows grad f x grad g
    double m;
};

struct Node {
    long long id;
    Vec3 x;
    double f, g, m;
};

struct SegSink {
    std::vector<Seg> segs;
    bool degenerate = false;
};

void march_tet(const Node* v[4], SegSink& out) {
    bool fp = false, fn = false, gp = false, gn = false;
    for (int i = 0; i < 4; ++i) {
        fp |= v[i]->f > 0;
        fn |= v[i]->f <= 0;
        gp |= v[i]->g > 0;
        gn |= v[i]->g <= 0;
    }
    if (!(fp && fn && gp && gn)) return;
    FaceKey keys[2];
    Vec3 pts[2];
    double ms[2];
    int found = 0;
    for (int skip = 0; skip < 4; ++skip) {
        const Node* t[3];
        int q = 0;
        for (int i = 0; i < 4; ++i)
            if (i != skip) t[q++] = v[i];
        std::sort(t, t + 3, [](const Node* a, const Node* b) { return a->id < b->id; });
        double c0 = t[1]->f * t[2]->g - t[2]->f * t[1]->g;
        double c1 = t[2]->f * t[0]->g - t[0]->f * t[2]->g;
        double c2 = t[0]->f * t[1]->g - t[1]->f * t[0]->g;
        bool pos = c0 > 0 && c1 > 0 && c2 > 0, neg = c0 < 0 && c1 < 0 && c2 < 0;
        if (!pos && !neg) {
            if (c0 == 0 && c1 == 0 && c2 == 0) continue;
            bool zero = c0 == 0 || c1 == 0 || c2 == 0;
            bool same = (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
            if (zero && same) out.degenerate = true;
            continue;
        }
        if (found == 2) {
            out.degenerate = true;
            return;
        }
        double s = c0 + c1 + c2;
        double l0 = c0 / s, l1 = c1 / s, l2 = c2 / s;
        keys[found] = {t[0]->id, t[1]->id, t[2]->id};
        pts[found] = l0 * t[0]->x + l1 * t[1]->x + l2 * t[2]->x;
        ms[found] = l0 * t[0]->m + l1 * t[1]->m + l2 * t[2]->m;
        ++found;
    }
    if (found == 0) return;
    if (found != 2) {
        out.degenerate = true;
        return;
    }
    if (ms[0] <= 0 && ms[1] <= 0) return;
    // orientation from grad f x grad g of the linear interpolant
    Vec3 e1 = v[1]->x - v[0]->x, e2 = v[2]->x - v[0]->x, e3 = v[3]->x - v[0]->x;
    Vec3 c23 = cross(e2, e3), c31 = cross(e3, e1), c12 = cross(e1, e2);
    Vec3 gf = (v[1]->f - v[0]->f) * c23 + (v[2]->f - v[0]->f) * c31 + (v[3]->f - v[0]->f) * c12;
    Vec3 gg = (v[1]->g - v[0]->g) * c23 + (v[2]->g - v[0]->g) * c31 + (v[3]->g - v[0]->g) * c12;
    Vec3 dir = cross(gf, gg);
    Vec3 d = pts[1] - pts[0];
    double scale = norm(d) * norm(dir);
    out.segs.push_back({keys[0], keys[1], pts[0], pts[1], scale > 0 ? dot(d, dir) / scale : 0.0, ms[0] + ms[1]});
}

// Kuhn split of a hexahedron with corners indexed by bit (axis 0, 1, 2)
void march_hex(const Node* c[8], SegSink& out) {
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : perms) {
        int a = 1 << p[0], b = a | (1 << p[1]);
        const Node* t[4] = {c[0], c[a], c[b], c[7]};
        march_tet(t, out);
    }
}

// exact zeros get a tiny positive value that differs per vertex
Node make_node(long long id, const Vec3& x, const Vec3& u, const RegularValue& rv) {
    constexpr double eps = 1e-150;
    double f = dot(u, rv.W1), g = dot(u, rv.W2);
    std::uint64_t z = static_cast<std::uint64_t>(id) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 31)) * 0xbf58476d1ce4e5b9ULL;
    double h = static_cast<double>((z ^ (z >> 29)) >> 11) * 0x1.0p-53;
    if (f == 0) f = eps * (1 + h);
    if (g == 0) g = eps * (2 - h);
    return {id, x, f, g, dot(u, rv.M)};
}

double point_line_dist(const Vec3& p, const Vec3& a, const Vec3& b) {
    return norm(p - (a + project_to_segment(p, a, b) * (b - a)));
}

void dp(const std::vector<Vec3>& pts, std::size_t i, std::size_t j, double tol, std::vector<bool>& keep) {
    if (j <= i + 1) return;
    double best = -1;
    std::size_t at = i;
    for (std::size_t m = i + 1; m < j; ++m) {
        double d = point_line_dist(pts[m], pts[i], pts[j]);
        if (d > best) {
            best = d;
            at = m;
        }
    }
    if (best > tol) {
        keep[at] = true;
        dp(pts, i, at, tol, keep);
        dp(pts, at, j, tol, keep);
    }
}

Polyline3 simplify_loop(const std::vector<Vec3>& pts, double tol) {
    std::size_t n = pts.size();
    Polyline3 out;
    if (n < 8) {
        out.vertices = pts;
        return out;
    }
    // split at the point farthest from the start
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (norm(pts[i] - pts[0]) > norm(pts[far] - pts[0])) far = i;
    std::vector<Vec3> ring(pts.begin(), pts.end());
    ring.push_back(pts[0]);
    std::vector<bool> keep(ring.size(), false);
    keep[0] = keep[far] = keep[n] = true;
    dp(ring, 0, far, tol, keep);
    dp(ring, far, n, tol, keep);
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.vertices.push_back(ring[i]);
    if (out.vertices.size() < 3) out.vertices = pts;
    return out;
}

std::optional<std::vector<Polyline3>> chain_loops(std::vector<Seg>& segs, double tol) {
    std::unordered_map<FaceKey, std::array<std::size_t, 2>, FaceKeyHash> ends;
    ends.reserve(segs.size() * 2);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        for (const FaceKey& k : {segs[i].a, segs[i].b}) {
            auto [it, fresh] = ends.try_emplace(k, std::array<std::size_t, 2>{i, none});
            if (fresh) continue;
            if (it->second[1] != none) return std::nullopt;
            it->second[1] = i;
        }
    }
    for (const auto& [k, e] : ends)
        if (e[1] == none) return std::nullopt;
    std::vector<bool> used(segs.size(), false);
    std::vector<Polyline3> loops;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (used[s]) continue;
        std::vector<Vec3> pts;
        double vote = 0, m = 0;
        std::size_t cur = s;
        FaceKey at = segs[s].a;
        while (!used[cur]) {
            used[cur] = true;
            const Seg& g = segs[cur];
            bool fwd = g.a == at;
            const Vec3& p = fwd ? g.pa : g.pb;
            vote += fwd ? g.vote : -g.vote;
            m += g.m;
            if (pts.empty() || norm(p - pts.back()) > 1e-12) pts.push_back(p);
            at = fwd ? g.b : g.a;
            const auto& e = ends.at(at);
            cur = e[0] == cur ? e[1] : e[0];
        }
        if (cur != s || !(at == segs[s].a)) return std::nullopt;
        while (pts.size() > 1 && norm(pts.front() - pts.back()) <= 1e-12) pts.pop_back();
        if (pts.size() < 3 || m <= 0) continue;
        if (vote < 0) std::reverse(pts.begin(), pts.end());
        loops.push_back(simplify_loop(pts, tol));
    }
    return loops;
}

int odd_cells(int resolution) { return std::max(8, resolution / 4) | 1; }

std::optional<std::vector<Polyline3>> extract_tubes(const SphereField& field, const RegularValue& rv, int resolution) {
    int n = odd_cells(resolution);
    std::vector<Seg> all;
    double min_rad = std::numeric_limits<double>::infinity();
    long long base = 0;
    for (const auto& tube : field.tubes) {
        TubeFrames fr = tube_frames(tube);
        std::size_t N = tube.path.size();
        std::size_t per = static_cast<std::size_t>(n + 1) * (n + 1);
        std::vector<Node> nodes(N * per);
        for (double r : tube.radius) min_rad = std::min(min_rad, r);
        parallel_for(N, [&](std::size_t i) {
            for (int a = 0; a <= n; ++a)
                for (int b = 0; b <= n; ++b) {
                    double s = -1 + 2.0 * a / n, t = -1 + 2.0 * b / n;
                    Vec3 x = tube.path[i] + tube.radius[i] * (s * fr.U[i] + t * fr.V[i]);
                    std::size_t k = i * per + a * (n + 1) + b;
                    nodes[k] = make_node(base + static_cast<long long>(k), x, field(x), rv);
                }
        });
        std::vector<SegSink> sinks(N);
        parallel_for(N, [&](std::size_t i) {
            std::size_t j = (i + 1) % N;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const Node* c[8];
                    for (int bit = 0; bit < 8; ++bit) {
                        std::size_t sec = (bit & 1) ? j : i;
                        int aa = a + ((bit >> 1) & 1), bb = b + ((bit >> 2) & 1);
                        c[bit] = &nodes[sec * per + aa * (n + 1) + bb];
                    }
                    march_hex(c, sinks[i]);
                }
        });
        for (auto& s : sinks) {
            if (s.degenerate) return std::nullopt;
            all.insert(all.end(), s.segs.begin(), s.segs.end());
        }
        base += static_cast<long long>(N * per);
    }
    return chain_loops(all, 0.02 * min_rad);
}

std::optional<std::vector<Polyline3>> extract_box(const SphereField& field, const RegularValue& rv, int resolution) {
    Vec3 lo = field.box_lo, hi = field.box_hi;
    double side = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
    double h = side / resolution;
    int cnt[3];
    for (int d = 0; d < 3; ++d) {
        cnt[d] = static_cast<int>(std::ceil((hi[d] - lo[d]) / h)) + 1;
        lo[d] -= (0.3141592653 + 0.1 * d) * h;
    }
    auto id = [&](int i, int j, int k) { return (static_cast<long long>(i) * (cnt[1] + 1) + j) * (cnt[2] + 1) + k; };
    std::vector<Node> nodes(static_cast<std::size_t>(cnt[0] + 1) * (cnt[1] + 1) * (cnt[2] + 1));
    parallel_for(cnt[0] + 1, [&](std::size_t i) {
        for (int j = 0; j <= cnt[1]; ++j)
            for (int k = 0; k <= cnt[2]; ++k) {
                Vec3 x{lo[0] + i * h, lo[1] + j * h, lo[2] + k * h};
                long long q = id(static_cast<int>(i), j, k);
                nodes[q] = make_node(q, x, field(x), rv);
            }
    });
    std::vector<SegSink> sinks(cnt[0]);
    parallel_for(cnt[0], [&](std::size_t i) {
        for (int j = 0; j < cnt[1]; ++j)
            for (int k = 0; k < cnt[2]; ++k) {
                const Node* c[8];
                for (int bit = 0; bit < 8; ++bit)
                    c[bit] = &nodes[id(static_cast<int>(i) + (bit & 1), j + ((bit >> 1) & 1), k + ((bit >> 2) & 1))];
                march_hex(c, sinks[i]);
            }
    });
    std::vector<Seg> all;
    for (auto& s : sinks) {
        if (s.degenerate) return std::nullopt;
        all.insert(all.end(), s.segs.begin(), s.segs.end());
    }
    return chain_loops(all, 0.25 * h);
}

std::optional<std::vector<Polyline3>> try_extract(const SphereField& field, const RegularValue& rv, int resolution) {
    if (resolution < 8) throw InputError("preimage resolution must be at least 8");
    return field.tubes.empty() ? extract_box(field, rv, resolution) : extract_tubes(field, rv, resolution);
}

}  // namespace

RegularValue RegularValue::from(const Vec3& M) {
    RegularValue rv;
    rv.M = normalized(M);
    Vec3 h = std::abs(rv.M[1]) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    rv.W1 = normalized(h - dot(h, rv.M) * rv.M);
    rv.W2 = cross(rv.M, rv.W1);
    return rv;
}

std::pair<RegularValue, RegularValue> regular_value_pair(int index) {
    constexpr double delta = 0.2;
    double spin = 2.399963229728653 * index;
    double tilt = delta * (1 + 0.15 * index);
    Vec3 m1{std::sin(tilt) * std::cos(spin), std::sin(tilt) * std::sin(spin), std::cos(tilt)};
    Vec3 m2{std::cos(spin), std::sin(spin), 0.07 * index};
    return {RegularValue::from(m1), RegularValue::from(m2)};
}

std::vector<Polyline3> extract_preimage(const SphereField& field, const Vec3& M, int resolution) {
    auto loops = try_extract(field, RegularValue::from(M), resolution);
    if (!loops) throw NumericalError("preimage extraction produced open or branching chains");
    return *loops;
}

HopfResult hopf_preimage(const SphereField& field, int resolution, int pair_index) {
    if (pair_index < 0) throw InputError("regular value index must be non-negative");
    for (int idx = pair_index; idx < pair_index + 6; ++idx) {
        auto [a, b] = regular_value_pair(idx);
        auto la = try_extract(field, a, resolution);
        if (!la) continue;
        auto lb = try_extract(field, b, resolution);
        if (!lb) continue;
        HopfResult res;
        res.pair_index = idx;
        for (const auto& p : *la)
            for (const auto& q : *lb) res.raw += gauss_linking(p, q);
        res.value = std::lround(res.raw);
        if (std::abs(res.raw - res.value) > 1e-3) continue;
        res.first = std::move(*la);
        res.second = std::move(*lb);
        return res;
    }
    throw NumericalError("no regular value pair gave closed preimages");
}

// ---------------------------------------------------------------- energy

namespace {

double grad_sq(const SphereField& field, const Vec3& c, double h) {
    double s = 0;
    for (int d = 0; d < 3; ++d) {
        Vec3 a = c, b = c;
        a[d] += h;
        b[d] -= h;
        Vec3 du = (1 / (2 * h)) * (field(a) - field(b));
        s += dot(du, du);
    }
    return s;
}

}  // namespace

EnergyResult energy_p(const SphereField& field, double p, int resolution) {
    if (!(p >= 1)) throw InputError("energy exponent must be >= 1");
    if (resolution < 32) throw InputError("energy resolution must be at least 32");
    EnergyResult res;
    if (!field.tubes.empty()) {
        int n = resolution;
        struct Part {
            double e = 0, sup = 0;
        };
        for (const auto& tube : field.tubes) {
            TubeFrames fr = tube_frames(tube);
            std::size_t N = tube.path.size();
            std::vector<Part> parts(N);
            parallel_for(N, [&](std::size_t i) {
                std::size_t j = (i + 1) % N;
                Vec3 a = tube.path[i], b = tube.path[j];
                double len = norm(b - a);
                Vec3 T = normalized(b - a);
                Vec3 U = fr.U[i] + fr.U[j];
                U = normalized(U - dot(U, T) * T);
                Vec3 V = cross(T, U);
                double R = 0.5 * (tube.radius[i] + tube.radius[j]), hc = 2 * R / n;
                Vec3 mid = 0.5 * (a + b);
                Part part;
                for (int q = 0; q < n; ++q)
                    for (int w = 0; w < n; ++w) {
                        Vec3 c = mid + (-R + (q + 0.5) * hc) * U + (-R + (w + 0.5) * hc) * V;
                        double g2 = grad_sq(field, c, hc);
                        part.e += std::pow(g2, p / 2) * len * hc * hc;
                        part.sup = std::max(part.sup, std::sqrt(g2));
                    }
                parts[i] = part;
            });
            for (const auto& pt : parts) {
                res.value += pt.e;
                res.sup_gradient = std::max(res.sup_gradient, pt.sup);
            }
            res.cells += static_cast<long>(N) * n * n;
        }
    } else {
        Vec3 lo = field.box_lo, hi = field.box_hi;
        double side = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
        double h = side / resolution;
        int cnt[3];
        for (int d = 0; d < 3; ++d) cnt[d] = std::max(1, static_cast<int>(std::lround((hi[d] - lo[d]) / h)));
        std::vector<double> e(cnt[0]), sup(cnt[0]);
        parallel_for(cnt[0], [&](std::size_t i) {
            double acc = 0, m = 0;
            for (int j = 0; j < cnt[1]; ++j)
                for (int k = 0; k < cnt[2]; ++k) {
                    Vec3 c{lo[0] + (i + 0.5) * h, lo[1] + (j + 0.5) * h, lo[2] + (k + 0.5) * h};
                    double g2 = grad_sq(field, c, h);
                    acc += std::pow(g2, p / 2) * h * h * h;
                    m = std::max(m, std::sqrt(g2));
                }
            e[i] = acc;
            sup[i] = m;
        });
        for (int i = 0; i < cnt[0]; ++i) {
            res.value += e[i];
            res.sup_gradient = std::max(res.sup_gradient, sup[i]);
        }
        res.cells = static_cast<long>(cnt[0]) * cnt[1] * cnt[2];
    }
    if (!std::isfinite(res.value)) throw NumericalError("energy is not finite");
    return res;
}

// ---------------------------------------------------------------- Whitehead

SampledField sample_field(const SphereField& field, int n, const Vec3& lo, double side) {
    if (n < 8) throw InputError("sampling needs at least 8 nodes per axis");
    if (!(side > 0)) throw InputError("sampling box side must be positive");
    SampledField s;
    s.n = n;
    s.lo = lo;
    s.h = side / n;
    s.u.resize(static_cast<std::size_t>(n) * n * n);
    parallel_for(n, [&](std::size_t i) {
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Vec3 x{lo[0] + i * s.h, lo[1] + j * s.h, lo[2] + k * s.h};
                Vec3 u = field(x);
                if (!std::isfinite(u[0] + u[1] + u[2])) throw NumericalError("field sample is not finite");
                s.u[(i * n + j) * n + k] = normalized(u);
            }
    });
    return s;
}

double hopf_whitehead(const SampledField& s) {
    int n = s.n;
    if (n < 8 || s.u.size() != static_cast<std::size_t>(n) * n * n) throw InputError("bad sampled field");
    // the periodic box needs a nearly constant rim
    Vec3 mean{};
    long rim = 0;
    auto on_rim = [n](int i, int j, int k) { return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (on_rim(i, j, k)) {
                    mean = mean + s.at(i, j, k);
                    ++rim;
                }
    mean = (1.0 / rim) * mean;
    double worst = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (on_rim(i, j, k)) worst = std::max(worst, norm(s.at(i, j, k) - mean));
    if (worst > 0.35) throw InputError("field is not constant on the rim of the sampling box");

    std::size_t total = static_cast<std::size_t>(n) * n * n;
    std::size_t nc = static_cast<std::size_t>(n) * n * (n / 2 + 1);
    double* B[3];
    fftw_complex* Bh[3];
    for (int c = 0; c < 3; ++c) {
        B[c] = fftw_alloc_real(total);
        Bh[c] = fftw_alloc_complex(nc);
    }
    auto wrap = [n](int i) { return (i + n) % n; };
    // flux of the pulled-back area form through each cell face, as the solid angle of its image
    auto tri = [](const Vec3& a, const Vec3& b, const Vec3& c) {
        return 2 * std::atan2(dot(a, cross(b, c)), 1 + dot(a, b) + dot(b, c) + dot(c, a));
    };
    auto quad = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) { return tri(a, b, c) + tri(a, c, d); };
    std::vector<double> face[3];
    for (int c = 0; c < 3; ++c) face[c].resize(total);
    parallel_for(n, [&](std::size_t ii) {
        int i = static_cast<int>(ii), i1 = wrap(i + 1);
        for (int j = 0; j < n; ++j) {
            int j1 = wrap(j + 1);
            for (int k = 0; k < n; ++k) {
                int k1 = wrap(k + 1);
                std::size_t q = (static_cast<std::size_t>(i) * n + j) * n + k;
                face[0][q] = quad(s.at(i, j, k), s.at(i, j1, k), s.at(i, j1, k1), s.at(i, j, k1));
                face[1][q] = quad(s.at(i, j, k), s.at(i, j, k1), s.at(i1, j, k1), s.at(i1, j, k));
                face[2][q] = quad(s.at(i, j, k), s.at(i1, j, k), s.at(i1, j1, k), s.at(i, j1, k));
            }
        }
    });
    double inv_area = 1 / (s.h * s.h);
    parallel_for(n, [&](std::size_t ii) {
        int i = static_cast<int>(ii);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::size_t q = (static_cast<std::size_t>(i) * n + j) * n + k;
                auto id = [n](int a, int b, int c) { return (static_cast<std::size_t>(a) * n + b) * n + c; };
                B[0][q] = 0.5 * (face[0][q] + face[0][id(wrap(i + 1), j, k)]) * inv_area;
                B[1][q] = 0.5 * (face[1][q] + face[1][id(i, wrap(j + 1), k)]) * inv_area;
                B[2][q] = 0.5 * (face[2][q] + face[2][id(i, j, wrap(k + 1))]) * inv_area;
            }
    });
    std::vector<double> Breal[3];
    for (int c = 0; c < 3; ++c) Breal[c].assign(B[c], B[c] + total);
    for (int c = 0; c < 3; ++c) {
        fftw_plan pl = fftw_plan_dft_r2c_3d(n, n, n, B[c], Bh[c], FFTW_ESTIMATE);
        fftw_execute(pl);
        fftw_destroy_plan(pl);
    }
    // A = curl^{-1} B in the Coulomb gauge, symbol of the 7-point Laplacian
    std::vector<std::array<double, 2>> Ah[3];
    for (int c = 0; c < 3; ++c) Ah[c].assign(nc, {0, 0});
    auto kt = [&](int m) { return 2 * std::sin(kPi * m / n) / s.h; };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c <= n / 2; ++c) {
                int ma = a <= n / 2 ? a : a - n, mb = b <= n / 2 ? b : b - n;
                Vec3 k{kt(ma), kt(mb), kt(c)};
                double k2 = dot(k, k);
                std::size_t q = (static_cast<std::size_t>(a) * n + b) * (n / 2 + 1) + c;
                if (k2 < 1e-24) continue;
                Vec3 re{Bh[0][q][0], Bh[1][q][0], Bh[2][q][0]};
                Vec3 im{Bh[0][q][1], Bh[1][q][1], Bh[2][q][1]};
                // i k x B / k^2
                Vec3 kr = cross(k, re), ki = cross(k, im);
                for (int d = 0; d < 3; ++d) Ah[d][q] = {-ki[d] / k2, kr[d] / k2};
            }
    double H = 0;
    for (int d = 0; d < 3; ++d) {
        for (std::size_t q = 0; q < nc; ++q) {
            Bh[d][q][0] = Ah[d][q][0];
            Bh[d][q][1] = Ah[d][q][1];
        }
        fftw_plan pl = fftw_plan_dft_c2r_3d(n, n, n, Bh[d], B[d], FFTW_ESTIMATE);
        fftw_execute(pl);
        fftw_destroy_plan(pl);
        double acc = 0;
        for (std::size_t q = 0; q < total; ++q) acc += B[d][q] / static_cast<double>(total) * Breal[d][q];
        H += acc;
    }
    for (int c = 0; c < 3; ++c) {
        fftw_free(B[c]);
        fftw_free(Bh[c]);
    }
    return H * s.h * s.h * s.h / (16 * kPi * kPi);
}

// ---------------------------------------------------------------- flux

FluxResult fiber_flux(const SphereField& field, const Disk& disk, int resolution) {
    if (!(disk.radius > 0)) throw InputError("disk radius must be positive");
    if (resolution < 8) throw InputError("flux resolution must be at least 8");
    Vec3 nrm = normalized(disk.normal);
    Vec3 e1 = any_normal(nrm), e2 = cross(nrm, e1);
    auto integrand = [&](double a, double b, double h) {
        Vec3 x = disk.center + a * e1 + b * e2;
        Vec3 da = (1 / (2 * h)) * (field(x + h * e1) - field(x - h * e1));
        Vec3 db = (1 / (2 * h)) * (field(x + h * e2) - field(x - h * e2));
        return dot(field(x), cross(da, db));
    };
    double R = disk.radius;
    FluxResult res;
    if (field.tubes.empty()) {
        double h = 2 * R / resolution;
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) {
                double a = -R + (i + 0.5) * h, b = -R + (j + 0.5) * h;
                if (a * a + b * b < R * R) res.raw += integrand(a, b, h / 2) * h * h;
            }
    } else {
        double rmin = std::numeric_limits<double>::infinity();
        for (const auto& t : field.tubes)
            for (double r : t.radius) rmin = std::min(rmin, r);
        double target = 2 * rmin / resolution;
        auto near_tube = [&](const Vec3& x, double pad) {
            for (const auto& t : field.tubes) {
                std::size_t N = t.path.size();
                for (std::size_t i = 0; i < N; ++i) {
                    const Vec3 &a = t.path[i], &b = t.path[(i + 1) % N];
                    if (point_line_dist(x, a, b) < std::max(t.radius[i], t.radius[(i + 1) % N]) + pad) return true;
                }
            }
            return false;
        };
        struct Cell {
            double a, b, size;
        };
        std::vector<Cell> stack{{0, 0, 2 * R}};
        std::vector<Cell> fine;
        while (!stack.empty()) {
            Cell c = stack.back();
            stack.pop_back();
            double half = c.size / 2, diag = half * std::sqrt(2.0);
            double rc = std::hypot(c.a, c.b);
            if (rc - diag >= R) continue;
            if (!near_tube(disk.center + c.a * e1 + c.b * e2, diag)) continue;
            if (c.size <= target) {
                if (rc + diag > R) throw InputError("disk region touches tubes");
                fine.push_back(c);
                continue;
            }
            double q = c.size / 4;
            for (double da : {-q, q})
                for (double db : {-q, q}) stack.push_back({c.a + da, c.b + db, c.size / 2});
        }
        std::sort(fine.begin(), fine.end(), [](const Cell& x, const Cell& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
        std::vector<double> vals(fine.size());
        parallel_for(fine.size(), [&](std::size_t i) {
            const Cell& c = fine[i];
            vals[i] = integrand(c.a, c.b, c.size / 2) * c.size * c.size;
        });
        for (double v : vals) res.raw += v;
    }
    res.count = res.raw / (4 * kPi);
    return res;
}

}  // namespace hopflab
