#include "hopflab/grid_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hopflab/errors.hpp"
#include "hopflab/format.hpp"

namespace hopflab {

ScalingReport run_scaling(int m, double alpha, const std::vector<long>& ks, const SolveOptions& options) {
    if (m < 1 || m > kMaxDim) throw InputError("dimension must be in 1..4");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1) throw InputError("k must be >= 1");
        if (i > 0 && ks[i] <= ks[i - 1]) throw InputError("k values must increase");
        if (std::pow(static_cast<double>(ks[i]), m) > kMaxGridPoints) throw ResourceError("grid too large: k^m > 1e5");
    }
    CostModel model = CostModel::power_law(alpha);
    bool critical = m >= 2 && std::abs(alpha - critical_alpha(m)) < 1e-12;
    ScalingReport rep;
    BoxDomain box = BoxDomain::unit(m);
    for (long k : ks) {
        auto t0 = std::chrono::steady_clock::now();
        UniformGridSpec spec{m, static_cast<int>(k), 1.0, {}};
        auto pts = grid_points(spec);
        Solution sol = solve_brbd(pts, box, model, options);
        ScalingRow row;
        row.m = m;
        row.alpha = alpha;
        row.k = k;
        row.upper = sol.value;
        row.method = sol.method;
        row.lower = critical ? grid_lower_bound({m, k, 0}).lambda : 0.0;
        row.flux_lower = sol.lower_bound.value_or(0.0);
        double norm = std::pow(static_cast<double>(k), m * alpha);
        row.xi_upper = row.upper / norm;
        row.xi_lower = row.lower / norm;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (row.lower > row.upper) throw NumericalError("grid lower bound exceeds the construction");
        rep.rows.push_back(row);
    }
    return rep;
}

SingularityReport singularity_grid(long k) {
    if (k < 1 || k > 6) throw InputError("singularity grid needs 1 <= k <= 6");
    constexpr double side = 1.0 / 40;
    SingularityReport rep;
    rep.k = k;
    UniformGridSpec spec{4, static_cast<int>(k), side, {0.5, 0.5, 0.5, 0.5}};
    rep.points = grid_points(spec);
    rep.box = spec.box();
    CostModel model = CostModel::power_law(critical_alpha(4));
    // lengths scale with the box side, multiplicities do not
    rep.lower = side * grid_lower_bound({4, k, 0}).lambda;
    rep.flux_lower = flux_lower_bound(rep.points, rep.box, model);
    rep.upper = dyadic_construction(rep.points, rep.box, model).value;
    double k3 = std::pow(static_cast<double>(k), 3);
    rep.ratio = rep.lower / k3;
    rep.certified_ratio = std::max(rep.lower, rep.flux_lower) / k3;
    return rep;
}

namespace {

double rtilde(double i) {
    double l = std::log(i);
    return 1.0 / (i * i * i * i * l * l);
}

// sum of rtilde over i >= 2, tail past M by the integral of the same expression
double rtilde_total() {
    constexpr long M = 1000000;
    double s = 0;
    for (long i = M; i >= 2; --i) s += rtilde(static_cast<double>(i));
    double l = std::log(static_cast<double>(M));
    s += 1.0 / (3.0 * std::pow(static_cast<double>(M), 3) * l * l);
    return s;
}

}  // namespace

std::vector<BudgetSeries> budget_series_at(const std::vector<long>& cutoffs) {
    for (long n : cutoffs)
        if (n < 2) throw InputError("budget series needs N >= 2");
    std::vector<long> sorted = cutoffs;
    std::sort(sorted.begin(), sorted.end());
    double c = 1.0 / (8.0 * rtilde_total());
    std::vector<BudgetSeries> out;
    double s1 = 0, s2 = 0, s3 = 0;
    long i = 2;
    for (long n : sorted) {
        for (; i <= n; ++i) {
            double x = static_cast<double>(i), l = std::log(x);
            s1 += c * rtilde(x);
            s2 += c / (x * l * l);
            s3 += c / (x * l);
        }
        BudgetSeries b;
        b.N = n;
        b.c = c;
        b.S1 = s1;
        b.S2 = s2;
        b.S3 = s3;
        b.S2_tail = c / std::log(static_cast<double>(n));
        b.S3_floor = c * (std::log(std::log(static_cast<double>(n))) - std::log(std::log(3.0)));
        out.push_back(b);
    }
    return out;
}

BudgetSeries budget_series(long N) { return budget_series_at({N}).front(); }

std::string report_csv(const ScalingReport& report) {
    std::ostringstream os;
    os << "m,alpha,k,upper,lower,xi_upper,xi_lower,seconds\n";
    for (const auto& r : report.rows) {
        os << r.m << ',' << fmt_sig(r.alpha) << ',' << r.k << ',' << fmt_sig(r.upper) << ',' << fmt_sig(r.lower) << ','
           << fmt_sig(r.xi_upper) << ',' << fmt_sig(r.xi_lower) << ',' << fmt_sig(r.seconds) << '\n';
    }
    return os.str();
}

nlohmann::json report_json(const ScalingReport& report) {
    auto rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"m", r.m},
                        {"alpha", r.alpha},
                        {"k", r.k},
                        {"upper", r.upper},
                        {"lower", r.lower},
                        {"xi_upper", r.xi_upper},
                        {"xi_lower", r.xi_lower},
                        {"seconds", r.seconds},
                        {"flux_lower", r.flux_lower},
                        {"method", r.method}});
    }
    nlohmann::json j{{"rows", rows}};
    round_floats(j);
    return j;
}

void emit_csv(const ScalingReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << report_csv(report);
}

void emit_json(const ScalingReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << report_json(report).dump(2) << '\n';
}

}  // namespace hopflab
