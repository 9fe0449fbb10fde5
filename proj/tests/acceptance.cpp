#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "graph_fixtures.hpp"
#include "hopflab/grid_lab.hpp"
#include "hopflab/hopf_fields.hpp"

using namespace hopflab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome linking_goldens() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double worst_frac = 0;
    std::string d;
    for (int k = 1; k <= 3; ++k) {
        auto s = build_sheaves(k);
        long total = total_linking(s);
        ok &= total == static_cast<long>(k) * k * k * k;
        for (const auto& a : s.horizontal)
            for (const auto& b : s.perpendicular) {
                double g = gauss_linking(a, b);
                long c = crossing_linking(a, b);
                worst_frac = std::max(worst_frac, std::abs(g - std::round(g)));
                ok &= std::lround(g) == c;
            }
        d += fmt("k=%d total=%ld ", k, total);
    }
    double t = seconds_since(t0);
    ok &= worst_frac < 1e-3 && t < 30;
    return {ok, d + fmt("max|gauss-round|=%.2e %.1fs", worst_frac, t)};
}

Outcome hopf_goldens() {
    auto t0 = std::chrono::steady_clock::now();
    long a = hopf_preimage(stadium_field(), 128).value;
    long b = hopf_preimage(linked_stadia_field(), 128).value;
    long c = hopf_preimage(spaghetton_field(1), 128).value;
    long e = hopf_preimage(spaghetton_field(2), 128).value;
    double t = seconds_since(t0);
    return {a == 0 && b == 2 && c == 2 && e == 32 && t < 300,
            fmt("stadium=%ld linked=%ld spaghetton1=%ld spaghetton2=%ld %.1fs", a, b, c, e, t)};
}

Outcome whitehead() {
    double h = hopf_whitehead(sample_field(hopf_map_field(), 96, {-20, -20, -20}, 40));
    auto st = stadium_field(1.5);
    double s = hopf_whitehead(sample_field(st, 96, {-13, -13, -13}, 26));
    long sp = hopf_preimage(st, 128).value;
    auto ls = linked_stadia_field(0.33);
    double l = hopf_whitehead(sample_field(ls, 128, {-14, -14, -14}, 28));
    long lp = hopf_preimage(ls, 128).value;
    bool ok = std::abs(h - 1) <= 0.05 && std::abs(s) <= 0.05 && std::abs(s - sp) <= 0.1 && std::abs(l - lp) <= 0.1;
    return {ok, fmt("hopfmap=%.4f stadium=%.4f (preimage %ld) linked=%.4f (preimage %ld)", h, s, sp, l, lp)};
}

Outcome crossing_gadget() {
    auto t0 = std::chrono::steady_clock::now();
    auto g = gadget_curves(1.0, 96);
    bool ok = true;
    std::string d = "projected:";
    for (const auto& p : BoundaryChart::candidate_poles(1.0)) {
        BoundaryChart ch(1.0, p);
        long m = crossing_linking(project_boundary_to_R3(g.L1, ch), project_boundary_to_R3(g.L2, ch));
        ok &= m == 1;
        d += fmt(" %ld", m);
    }
    long h = hopf_preimage(gadget_field(0.01, 1.0, GadgetVariant::boundary4d), 128).value;
    double t = seconds_since(t0);
    ok &= h == 2 && t < 120;
    return {ok, d + fmt(" hopf=%ld %.1fs", h, t)};
}

Outcome energy_scaling() {
    double emin = 1e300, emax = 0, gmin = 1e300, gmax = 0;
    for (int k = 1; k <= 3; ++k) {
        auto e = energy_p(spaghetton_field(k), 3, 64);
        double en = e.value / (k * k * k), gr = e.sup_gradient / k;
        emin = std::min(emin, en), emax = std::max(emax, en);
        gmin = std::min(gmin, gr), gmax = std::max(gmax, gr);
    }
    auto f = stadium_field(1.0);
    double worst = 0;
    for (double p : {2.0, 3.0, 4.0}) {
        double ratio = energy_p(dilate(f, 2.0), p, 64).value / energy_p(f, p, 64).value;
        worst = std::max(worst, std::abs(ratio / std::pow(2.0, 3 - p) - 1));
    }
    bool ok = emax / emin <= 4 && gmax / gmin <= 3 && worst <= 0.03;
    return {ok, fmt("E3/k^3 spread=%.3f grad/k spread=%.3f dilation err=%.4f", emax / emin, gmax / gmin, worst)};
}

Outcome concavity() {
    long total = 0;
    std::string d;
    for (double a : {0.5, 2.0 / 3, 0.75, 0.9, 1.0}) {
        long v = concavity_violations(a, 10000);
        total += v;
        d += fmt("a=%.3g:%ld ", a, v);
    }
    return {total == 0, d};
}

Outcome graph_properties() {
    std::mt19937_64 rng(2024);
    long bad = 0;
    for (int t = 0; t < 1000; ++t) {
        auto inst = fixtures::random_instance(rng);
        std::vector<TransportGraph> all = inst.threads;
        all.insert(all.end(), inst.loops.begin(), inst.loops.end());
        auto g = fixtures::glue_all(all);
        if (!validate(g).ok()) { ++bad; continue; }
        if (boundary_flux(g) != inst.sources) ++bad;
        if (!same_geometry(reassemble(g, decompose(g)), g)) ++bad;
        std::size_t cut = all.size() / 2 + 1;
        auto head = fixtures::glue_all({all.begin(), all.begin() + cut});
        auto rest = fixtures::glue_all({all.begin() + cut, all.end()});
        if (!same_geometry(glue(subtract(g, rest), rest), g) || !same_geometry(subtract(g, rest), head)) ++bad;
    }
    return {bad == 0, fmt("violations=%ld of 1000", bad)};
}

std::vector<Point> lattice_points(std::mt19937_64& rng, int count) {
    std::vector<Point> pts;
    while (static_cast<int>(pts.size()) < count) {
        Point p{double(1 + rng() % 7) / 8, double(1 + rng() % 7) / 8};
        if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
    }
    return pts;
}

Outcome solver_sanity() {
    auto box = BoxDomain::unit(2);
    auto model = CostModel::power_law(0.5);
    SolveOptions opt;
    opt.resolution = 9;
    std::mt19937_64 rng(99);
    long bad = 0;
    for (int t = 0; t < 50; ++t) {
        auto pts = lattice_points(rng, 1 + static_cast<int>(rng() % 3));
        opt.seed = t;
        auto star = star_baseline(pts, box, model);
        auto dy = dyadic_construction(pts, box, model);
        auto ls = local_search(star, model, opt);
        double oracle = oracle_exact(pts, box, model, opt);
        double lb = flux_lower_bound(pts, box, model);
        if (ls.value > star.value + kCostTol) ++bad;
        if (oracle > star.value + kCostTol) ++bad;
        for (double v : {star.value, dy.value, ls.value, oracle})
            if (lb > v + kCostTol) ++bad;
    }
    long sub = 0;
    for (int t = 0; t < 100; ++t) {
        auto all = lattice_points(rng, 2 + static_cast<int>(rng() % 2));
        std::size_t cut = 1 + rng() % (all.size() - 1);
        std::vector<Point> a(all.begin(), all.begin() + cut), b(all.begin() + cut, all.end());
        double whole = oracle_exact(all, box, model, opt);
        if (whole > oracle_exact(a, box, model, opt) + oracle_exact(b, box, model, opt) + 1e-6) ++sub;
    }
    bool same = true;
    for (std::uint64_t seed : {1u, 7u, 42u}) {
        opt.seed = seed;
        auto pts = lattice_points(rng, 3);
        auto s1 = solution_to_json(solve_brbd(pts, box, model, opt), model).dump();
        auto s2 = solution_to_json(solve_brbd(pts, box, model, opt), model).dump();
        same &= s1 == s2;
    }
    return {bad == 0 && sub == 0 && same,
            fmt("ordering violations=%ld subadditivity violations=%ld deterministic=%s", bad, sub, same ? "yes" : "no")};
}

const std::vector<long> kScalingKs{2, 4, 8, 16, 32};

Outcome critical_scaling() {
    auto t0 = std::chrono::steady_clock::now();
    auto rep = run_scaling(2, 0.5, kScalingKs, SolveOptions{});
    bool increasing = true, ordered = true;
    std::string d = "xi_lower:";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        if (i && !(r.xi_lower > rep.rows[i - 1].xi_lower)) increasing = false;
        if (r.lower > r.upper + kCostTol) ordered = false;
        d += fmt(" %.4f", r.xi_lower);
    }
    double unbounded_small = grid_lower_bound({2, 1L << 20, 0}).xi;
    double unbounded_large = grid_lower_bound({2, 1L << 40, 0}).xi;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = rep.rows.size();
    for (const auto& r : rep.rows) {
        double x = std::log(static_cast<double>(r.k));
        sx += x, sy += r.xi_upper, sxx += x * x, sxy += x * r.xi_upper;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double t = seconds_since(t0);
    bool ok = increasing && ordered && unbounded_large > unbounded_small && slope > 0 && t < 600;
    return {ok, d + fmt(" strict=%s closed-form 2^20:%.4f 2^40:%.4f slope=%.4f lower<=upper=%s %.1fs", increasing ? "yes" : "no",
                        unbounded_small, unbounded_large, slope, ordered ? "yes" : "no", t)};
}

Outcome subcritical() {
    auto t0 = std::chrono::steady_clock::now();
    auto rep = run_scaling(2, 0.75, kScalingKs, SolveOptions{});
    double lo = 1e300, hi = 0;
    for (const auto& r : rep.rows) lo = std::min(lo, r.xi_upper), hi = std::max(hi, r.xi_upper);
    double t = seconds_since(t0);
    return {hi / lo <= 3 && t < 600, fmt("xi_upper spread=%.3f %.1fs", hi / lo, t)};
}

Outcome singularities() {
    bool ok = true;
    double prev = -1;
    std::string d;
    for (long k = 1; k <= 4; ++k) {
        auto s = singularity_grid(k);
        ok &= static_cast<long>(s.points.size()) == k * k * k * k;
        ok &= s.certified_ratio > prev;
        prev = s.certified_ratio;
        d += fmt("k=%ld n=%zu ratio=%.5f ", k, s.points.size(), s.certified_ratio);
    }
    return {ok, d};
}

Outcome budget() {
    auto rows = budget_series_at({1000, 10000, 100000, 200000, 1000000});
    double s2_half = 0, s2 = 0, remainder = 0;
    bool dominated = true;
    for (const auto& r : rows) {
        if (r.N == 100000) s2_half = r.S2;
        if (r.N == 200000) s2 = r.S2, remainder = r.S2_tail / r.S2;
        else dominated &= r.S3 >= r.S3_floor;
    }
    double cauchy = (s2 - s2_half) / s2;
    return {cauchy < 1e-5 && dominated, fmt("S2 relative Cauchy difference 1e5..2e5=%.3e (remainder estimate %.3e) S3>=floor=%s",
                                             cauchy, remainder, dominated ? "yes" : "no")};
}

}  // namespace

int main() {
    std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, linking_goldens}, {2, hopf_goldens},     {3, whitehead},        {4, crossing_gadget},
        {5, energy_scaling},  {6, concavity},        {7, graph_properties}, {8, solver_sanity},
        {9, critical_scaling}, {10, subcritical},    {11, singularities},   {12, budget}};
    int failed = 0;
    for (auto& [id, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
