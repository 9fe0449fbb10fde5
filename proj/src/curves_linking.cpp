#include "hopflab/curves_linking.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "hopflab/errors.hpp"

namespace hopflab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Aabb {
    Vec3 lo, hi;
};

Aabb seg_box(const Vec3& a, const Vec3& b) {
    Aabb r;
    for (int i = 0; i < 3; ++i) {
        r.lo[i] = std::min(a[i], b[i]);
        r.hi[i] = std::max(a[i], b[i]);
    }
    return r;
}

double box_gap(const Aabb& a, const Aabb& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i) {
        double d = std::max({0.0, a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]});
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<Aabb> boxes_of(const Polyline3& c) {
    std::vector<Aabb> out;
    for (std::size_t i = 0; i < c.segment_count(); ++i) out.push_back(seg_box(c.at(i), c.at(i + 1)));
    return out;
}

// signed solid angle of segment pair (a,b), (c,d) over 4 pi
double pair_linking(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    Vec3 r13 = c - a, r14 = d - a, r23 = c - b, r24 = d - b;
    Vec3 n[4] = {cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)};
    for (auto& v : n) {
        double l = norm(v);
        if (l < 1e-300) return 0;
        v = (1.0 / l) * v;
    }
    auto as = [](double x) { return std::asin(std::clamp(x, -1.0, 1.0)); };
    double omega = as(dot(n[0], n[1])) + as(dot(n[1], n[2])) + as(dot(n[2], n[3])) + as(dot(n[3], n[0]));
    double s = dot(cross(d - c, b - a), r13);
    if (s == 0) return 0;
    return (s > 0 ? omega : -omega) / (4 * kPi);
}

}  // namespace

double project_to_segment(const Vec3& x, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double l2 = dot(ab, ab);
    if (l2 == 0) return 0;
    return std::clamp(dot(x - a, ab) / l2, 0.0, 1.0);
}

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
    Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
    double s = 0, t = 0;
    if (a <= 1e-300 && e <= 1e-300) return norm(r);
    if (a <= 1e-300) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        double c = dot(d1, r);
        if (e <= 1e-300) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            double b = dot(d1, d2), den = a * e - b * b;
            s = den > 1e-300 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0) {
                t = 0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1) {
                t = 1;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return norm((p0 + s * d1) - (q0 + t * d2));
}

double Polyline3::length() const {
    double s = 0;
    for (std::size_t i = 0; i < segment_count(); ++i) s += norm(at(i + 1) - at(i));
    return s;
}

void Polyline3::check() const {
    if (closed && vertices.size() < 3) throw InputError("closed curve needs at least 3 vertices");
    if (!closed && vertices.size() < 2) throw InputError("open curve needs at least 2 vertices");
    for (std::size_t i = 0; i < segment_count(); ++i) {
        if (norm(at(i + 1) - at(i)) <= 1e-12) throw InputError("curve has consecutive duplicate points");
    }
}

bool Polyline3::self_intersects(double tol) const {
    std::size_t n = segment_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (closed && i == 0 && j == n - 1) continue;
            if (segment_distance(at(i), at(i + 1), at(j), at(j + 1)) <= tol) return true;
        }
    }
    return false;
}

Polyline3 Polyline3::reversed() const {
    Polyline3 r = *this;
    std::reverse(r.vertices.begin(), r.vertices.end());
    return r;
}

Polyline3 Polyline3::translated(const Vec3& t) const {
    Polyline3 r = *this;
    for (auto& v : r.vertices) v = v + t;
    return r;
}

double min_distance(const Polyline3& a, const Polyline3& b) {
    auto ba = boxes_of(a), bb = boxes_of(b);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ba.size(); ++i) {
        for (std::size_t j = 0; j < bb.size(); ++j) {
            if (box_gap(ba[i], bb[j]) >= best) continue;
            best = std::min(best, segment_distance(a.at(i), a.at(i + 1), b.at(j), b.at(j + 1)));
        }
    }
    return best;
}

FramedCurve FramedCurve::reference(const Polyline3& c, const Vec3& plane_normal) {
    c.check();
    Vec3 n = normalized(plane_normal);
    Vec3 area{};
    for (std::size_t i = 0; i < c.vertices.size(); ++i) area = area + cross(c.at(i), c.at(i + 1));
    if (dot(area, n) <= 0) throw InputError("curve does not run counter-clockwise around the frame normal");
    FramedCurve f;
    f.curve = c;
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
        if (std::abs(dot(c.at(i) - c.at(0), n)) > 1e-9) throw InputError("reference framing needs a planar curve");
    }
    f.tau1.assign(c.vertices.size(), n);
    for (std::size_t i = 0; i < c.vertices.size(); ++i) f.tau2.push_back(cross(f.tangent(i), n));
    return f;
}

Vec3 FramedCurve::tangent(std::size_t i) const {
    std::size_t n = curve.vertices.size();
    Vec3 next = normalized(curve.at(i + 1) - curve.at(i));
    Vec3 prev = normalized(curve.at(i) - curve.at(i + n - 1));
    return normalized(next + prev);
}

void FramedCurve::check() const {
    curve.check();
    if (tau1.size() != curve.vertices.size() || tau2.size() != curve.vertices.size())
        throw InputError("frame count does not match vertex count");
    for (std::size_t i = 0; i < tau1.size(); ++i) {
        Vec3 t = tangent(i);
        bool ok = std::abs(norm(tau1[i]) - 1) < 1e-6 && std::abs(norm(tau2[i]) - 1) < 1e-6 &&
                  std::abs(dot(tau1[i], tau2[i])) < 1e-6 && std::abs(dot(tau1[i], t)) < 1e-6 &&
                  std::abs(dot(tau2[i], t)) < 1e-6 && dot(cross(tau1[i], tau2[i]), t) > 0;
        if (!ok) throw InputError("frame is not a direct orthonormal normal pair");
    }
}

double gauss_linking(const Polyline3& c1, const Polyline3& c2) {
    if (!c1.closed || !c2.closed) throw InputError("linking needs closed curves");
    c1.check();
    c2.check();
    auto b1 = boxes_of(c1), b2 = boxes_of(c2);
    double sum = 0;
    for (std::size_t i = 0; i < b1.size(); ++i) {
        const Vec3 &a = c1.at(i), &b = c1.at(i + 1);
        for (std::size_t j = 0; j < b2.size(); ++j) {
            const Vec3 &c = c2.at(j), &d = c2.at(j + 1);
            if (box_gap(b1[i], b2[j]) < 1e-6 && segment_distance(a, b, c, d) <= 1e-6)
                throw InputError("curves are too close or intersect");
            sum += pair_linking(a, b, c, d);
        }
    }
    return sum;
}

namespace {

struct Projected {
    std::vector<std::array<double, 2>> p;
    std::vector<double> h;
};

Projected project(const Polyline3& c, const Vec3& e1, const Vec3& e2, const Vec3& d) {
    Projected out;
    for (const auto& v : c.vertices) {
        out.p.push_back({dot(v, e1), dot(v, e2)});
        out.h.push_back(dot(v, d));
    }
    return out;
}

// twice the linking number, or nullopt when the projection is not generic
std::optional<long> crossing_sum(const Polyline3& c1, const Polyline3& c2, const Vec3& dir) {
    Vec3 d = normalized(dir);
    Vec3 helper = std::abs(d[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 e1 = normalized(cross(helper, d));
    Vec3 e2 = cross(d, e1);
    Projected p = project(c1, e1, e2, d), q = project(c2, e1, e2, d);
    std::size_t n1 = c1.segment_count(), n2 = c2.segment_count();
    long total = 0;
    constexpr double eps = 1e-9;
    for (std::size_t i = 0; i < n1; ++i) {
        auto a = p.p[i], b = p.p[(i + 1) % p.p.size()];
        double ax0 = std::min(a[0], b[0]), ax1 = std::max(a[0], b[0]);
        double ay0 = std::min(a[1], b[1]), ay1 = std::max(a[1], b[1]);
        double P[2] = {b[0] - a[0], b[1] - a[1]};
        for (std::size_t j = 0; j < n2; ++j) {
            auto c = q.p[j], e = q.p[(j + 1) % q.p.size()];
            if (std::max(c[0], e[0]) < ax0 - eps || std::min(c[0], e[0]) > ax1 + eps) continue;
            if (std::max(c[1], e[1]) < ay0 - eps || std::min(c[1], e[1]) > ay1 + eps) continue;
            double Q[2] = {e[0] - c[0], e[1] - c[1]};
            double den = P[0] * Q[1] - P[1] * Q[0];
            double w[2] = {c[0] - a[0], c[1] - a[1]};
            double lp = std::hypot(P[0], P[1]), lq = std::hypot(Q[0], Q[1]);
            if (std::abs(den) <= 1e-12 * lp * lq) {
                // parallel in projection: generic only if the lines are apart
                double off = std::abs(w[0] * P[1] - w[1] * P[0]) / lp;
                if (off <= eps) return std::nullopt;
                continue;
            }
            double s = (w[0] * Q[1] - w[1] * Q[0]) / den;
            double t = (w[0] * P[1] - w[1] * P[0]) / den;
            if (s < -eps || s > 1 + eps || t < -eps || t > 1 + eps) continue;
            if (s < eps || s > 1 - eps || t < eps || t > 1 - eps) return std::nullopt;
            double hp = p.h[i] + s * (p.h[(i + 1) % p.h.size()] - p.h[i]);
            double hq = q.h[j] + t * (q.h[(j + 1) % q.h.size()] - q.h[j]);
            if (std::abs(hp - hq) <= eps) return std::nullopt;
            long sign = den > 0 ? 1 : -1;  // orientation of (c1 dir, c2 dir) in the (e1, e2) plane
            total += hp > hq ? sign : -sign;
        }
    }
    if (total % 2 != 0) return std::nullopt;
    return total;
}

}  // namespace

long crossing_linking(const Polyline3& c1, const Polyline3& c2, Vec3 direction) {
    if (!c1.closed || !c2.closed) throw InputError("linking needs closed curves");
    c1.check();
    c2.check();
    if (norm(direction) == 0) throw InputError("projection direction must be nonzero");
    Vec3 d = normalized(direction);
    for (int attempt = 0; attempt <= 8; ++attempt) {
        if (auto s = crossing_sum(c1, c2, d)) return *s / 2;
        double ang = 2.399963229728653 * (attempt + 1);
        d = normalized(d + Vec3{0.17 * std::cos(ang), 0.17 * std::sin(ang), 0.05 * (attempt % 3 - 1)});
    }
    throw NumericalError("no generic projection direction found");
}

int arc_steps_for(double radius, double sagitta) {
    if (!(radius > 0) || !(sagitta > 0)) throw InputError("arc needs positive radius and sagitta");
    int n = 2;
    while (radius * (1 / std::cos(kPi / (2 * n)) - 1) > sagitta) ++n;
    return n;
}

Polyline3 stadium(const StadiumSpec& s) {
    if (s.plane != 12 && s.plane != 23) throw InputError("stadium plane must be 12 or 23");
    if (!(s.a1 > s.a0) || !(s.radius > 0) || s.arc_steps < 2) throw InputError("bad stadium parameters");
    Polyline3 c;
    double th = kPi / s.arc_steps, rv = s.radius / std::cos(th / 2);
    auto put = [&](double a, double b) {
        if (s.plane == 12)
            c.vertices.push_back({a, b, s.level});
        else
            c.vertices.push_back({s.level, a, b});
    };
    for (int m = 0; m < s.arc_steps; ++m) {
        double ang = -kPi / 2 + (m + 0.5) * th;
        put(s.a1 + rv * std::cos(ang), s.b_center + rv * std::sin(ang));
    }
    for (int m = 0; m < s.arc_steps; ++m) {
        double ang = kPi / 2 + (m + 0.5) * th;
        put(s.a0 + rv * std::cos(ang), s.b_center + rv * std::sin(ang));
    }
    return c;
}

Polyline3 stadium_L0() { return stadium({12, 0, -5, 5, 5, 5, arc_steps_for(5, 0.01)}); }

Polyline3 stadium_L0_perp() { return stadium({23, 0, -7, 3, 0, 5, arc_steps_for(5, 0.01)}); }

std::vector<FramedCurve> SheafPair::framed() const {
    std::vector<FramedCurve> out;
    for (const auto& c : horizontal) out.push_back(FramedCurve::reference(c, {0, 0, 1}));
    for (const auto& c : perpendicular) out.push_back(FramedCurve::reference(c, {1, 0, 0}));
    return out;
}

namespace {

double min_pairwise(const std::vector<Polyline3>& cs) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < cs.size(); ++a)
        for (std::size_t b = a + 1; b < cs.size(); ++b) best = std::min(best, min_distance(cs[a], cs[b]));
    return best;
}

}  // namespace

SheafPair build_sheaves(int k) {
    if (k < 1 || k > 8) throw InputError("sheaves need 1 <= k <= 8");
    SheafPair s;
    s.k = k;
    double step = 1.0 / k;
    int n = arc_steps_for(5 + 1, 0.01 / k);
    for (int j = 1; j <= k; ++j)
        for (int q = 1; q <= k; ++q) s.horizontal.push_back(stadium({12, q * step, -5, 5, 5, 5 + j * step, n}));
    for (int i = 1; i <= k; ++i)
        for (int q = 1; q <= k; ++q) s.perpendicular.push_back(stadium({23, i * step, -7, 3, 0, 5 + q * step, n}));
    s.intra_min_distance = std::min(min_pairwise(s.horizontal), min_pairwise(s.perpendicular));
    double inter = std::numeric_limits<double>::infinity();
    for (const auto& a : s.horizontal)
        for (const auto& b : s.perpendicular) inter = std::min(inter, min_distance(a, b));
    s.inter_min_distance = inter;
    return s;
}

long total_linking(const SheafPair& pair) {
    long total = 0;
    for (const auto& a : pair.horizontal)
        for (const auto& b : pair.perpendicular) total += std::lround(gauss_linking(a, b));
    return total;
}

double GadgetProfile::operator()(double s) const {
    double t = std::min(1.0, 2 * std::abs(s));
    double S = t * t * t * (t * (6 * t - 15) + 10);
    return 0.5 - 1.25 * S;
}

double GadgetProfile::slope(double s) const {
    double t = 2 * std::abs(s);
    if (t >= 1) return 0;
    double d = 30 * t * t * (t - 1) * (t - 1);
    return (s < 0 ? 2.5 : -2.5) * d;
}

double GadgetProfile::bend(double s) const {
    double t = 2 * std::abs(s);
    if (t >= 1) return 0;
    return -5 * 60 * t * (2 * t - 1) * (t - 1);
}

GadgetCurves gadget_curves(double r, int samples) {
    if (!(r > 0)) throw InputError("gadget needs r > 0");
    if (samples < 1) throw InputError("gadget needs at least one sample per side");
    GadgetCurves g;
    g.r = r;
    auto side = [&](Curve4& c, const Vec4& a, const Vec4& b) {
        for (int i = 0; i < samples; ++i) {
            double t = static_cast<double>(i) / samples;
            c.vertices.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2]),
                                  a[3] + t * (b[3] - a[3])});
        }
    };
    double h = r / 4;
    side(g.L1, {-r, 0, h, r}, {r, 0, h, r});
    side(g.L1, {r, 0, h, r}, {r, 0, h, -r});
    side(g.L1, {r, 0, h, -r}, {-r, 0, h, -r});
    side(g.L1, {-r, 0, h, -r}, {-r, 0, h, r});
    double low = -0.75 * r;
    side(g.L2, {0, -r, low, r}, {0, r, low, r});
    side(g.L2, {0, r, low, r}, {0, r, low, -r});
    GadgetProfile prof;
    int m = 4 * samples;
    for (int i = 0; i < m; ++i) {
        double x2 = r - 2 * r * i / m;
        g.L2.vertices.push_back({0, x2, r * prof(x2 / r), -r});
    }
    side(g.L2, {0, -r, low, -r}, {0, -r, low, r});
    return g;
}

BoundaryChart::BoundaryChart(double r, const Vec4& pole) : r_(r), pole_(pole) {
    if (!(r > 0)) throw InputError("chart needs r > 0");
    double l = std::sqrt(pole[0] * pole[0] + pole[1] * pole[1] + pole[2] * pole[2] + pole[3] * pole[3]);
    if (l == 0) throw InputError("chart pole must be nonzero");
    Vec4 a{pole[0] / l, pole[1] / l, pole[2] / l, pole[3] / l};
    double c = a[3];
    if (c < -1 + 1e-9) throw InputError("chart pole may not be the south pole");
    // rotation in the plane of a and e4 taking a to e4
    double K[4][4] = {};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) K[i][j] = (i == 3 ? 1.0 : 0.0) * a[j] - a[i] * (j == 3 ? 1.0 : 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double k2 = 0;
            for (int m = 0; m < 4; ++m) k2 += K[i][m] * K[m][j];
            rot_[i][j] = (i == j ? 1.0 : 0.0) + K[i][j] + k2 / (1 + c);
        }
}

Vec3 BoundaryChart::to_chart(const Vec4& x) const {
    double l = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    Vec4 w{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) w[i] += rot_[i][j] * x[j] / l;
    double den = 1 - w[3];
    if (den < 1e-12) throw NumericalError("point maps to the chart pole");
    return {w[0] / den, w[1] / den, -w[2] / den};
}

Vec4 BoundaryChart::from_chart(const Vec3& y) const {
    double n2 = dot(y, y);
    Vec4 w{2 * y[0] / (n2 + 1), 2 * y[1] / (n2 + 1), -2 * y[2] / (n2 + 1), (n2 - 1) / (n2 + 1)};
    Vec4 s{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s[i] += rot_[j][i] * w[j];
    double m = std::max({std::abs(s[0]), std::abs(s[1]), std::abs(s[2]), std::abs(s[3])});
    for (auto& v : s) v *= r_ / m;
    return s;
}

std::vector<Vec4> BoundaryChart::candidate_poles(double r) {
    return {{r, r, r, r}, {-r, r, r, r}, {r, -r, r, -r}, {r, r, -r, -r}};
}

Polyline3 project_boundary_to_R3(const Curve4& c, const BoundaryChart& chart) {
    if (c.vertices.size() < 3) throw InputError("curve needs at least 3 vertices");
    const Vec4& p = chart.pole();
    double pm = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2]), std::abs(p[3])});
    Vec4 pb{};
    for (int i = 0; i < 4; ++i) pb[i] = p[i] * chart.r() / pm;
    Polyline3 out;
    std::size_t n = c.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec4 &a = c.vertices[i], &b = c.vertices[(i + 1) % n];
        // distance from the pole to the segment, sampled
        for (int t = 0; t <= 8; ++t) {
            double s = t / 8.0, d2 = 0;
            for (int m = 0; m < 4; ++m) {
                double v = a[m] + s * (b[m] - a[m]) - pb[m];
                d2 += v * v;
            }
            if (std::sqrt(d2) < 0.1 * chart.r()) throw InputError("curve passes too close to the chart pole");
        }
        out.vertices.push_back(chart.to_chart(a));
    }
    return out;
}

nlohmann::json curve_to_json(const Polyline3& c) {
    auto vs = nlohmann::json::array();
    for (const auto& v : c.vertices) vs.push_back({v[0], v[1], v[2]});
    return {{"closed", c.closed}, {"vertices", vs}};
}

Polyline3 curve_from_json(const nlohmann::json& j) {
    try {
        Polyline3 c;
        c.closed = j.value("closed", true);
        for (const auto& v : j.at("vertices")) {
            if (!v.is_array() || v.size() != 3) throw InputError("curve vertex must have 3 coordinates");
            c.vertices.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
        }
        c.check();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad curve json: ") + e.what());
    }
}

}  // namespace hopflab
