#include "hopflab/cost_models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "hopflab/errors.hpp"

namespace hopflab {

namespace {

double parse_number(const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
    return v;
}

}  // namespace

CostModel CostModel::power_law(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw InputError("alpha must lie in (0, 1]");
    CostModel m;
    m.kind = Kind::power_law;
    m.alpha = alpha;
    return m;
}

CostModel CostModel::nu3() {
    CostModel m;
    m.kind = Kind::nu3;
    m.alpha = 1.0;
    return m;
}

CostModel CostModel::nu2_upper(double cnu) {
    if (!(cnu > 0)) throw InputError("Cnu must be positive");
    CostModel m;
    m.kind = Kind::nu2_upper;
    m.alpha = 0.75;
    m.cnu = cnu;
    return m;
}

CostModel CostModel::parse(const std::string& spec) {
    if (spec == "nu3") return nu3();
    if (spec.rfind("alpha:", 0) == 0) return power_law(parse_number(spec.substr(6)));
    if (spec == "nu2") return nu2_upper();
    if (spec.rfind("nu2:Cnu=", 0) == 0) return nu2_upper(parse_number(spec.substr(8)));
    throw InputError("unknown cost model '" + spec + "'");
}

double CostModel::cost(long d) const {
    double x = std::abs(static_cast<double>(d));
    switch (kind) {
        case Kind::power_law: return std::pow(x, alpha);
        case Kind::nu3: return 2 * std::numbers::pi * std::numbers::pi * x;
        case Kind::nu2_upper: return cnu * std::pow(x, 0.75);
    }
    return 0;
}

double CostModel::exponent() const { return kind == Kind::nu3 ? 1.0 : alpha; }

std::string CostModel::spec() const {
    char buf[64];
    switch (kind) {
        case Kind::power_law: std::snprintf(buf, sizeof buf, "alpha:%.9g", alpha); break;
        case Kind::nu3: std::snprintf(buf, sizeof buf, "nu3"); break;
        case Kind::nu2_upper: std::snprintf(buf, sizeof buf, "nu2:Cnu=%.9g", cnu); break;
    }
    return buf;
}

double w_alpha(const TransportGraph& g, const CostModel& model) {
    auto rep = validate(g);
    if (!rep.ok()) throw InputError("cost of an invalid graph: " + rep.messages.front());
    double w = 0;
    for (const auto& e : g.edges) w += model.cost(e.d) * g.edge_length(e);
    return w;
}

double kappa1(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw InputError("alpha must lie in (0, 1]");
    return std::min({alpha / 4, alpha * std::pow(1.0 / 8, alpha + 1), 1 - std::pow(8.0, -alpha)});
}

bool concavity_holds(long d1, long d2, double alpha) {
    if (d1 < 1 || d2 < 1) throw InputError("multiplicities must be >= 1");
    double a1 = std::pow(static_cast<double>(d1), alpha);
    double a2 = std::pow(static_cast<double>(d2), alpha);
    double lhs = std::pow(static_cast<double>(d1 + d2), alpha);
    double rhs = a1 + kappa1(alpha) * std::min(a2, d2 * a1 / d1);
    return lhs >= rhs - 1e-13 * lhs;
}

long concavity_violations(double alpha, long n) {
    if (n < 1) return 0;
    std::vector<double> pw(2 * n + 1);
    for (long d = 1; d <= 2 * n; ++d) pw[d] = std::pow(static_cast<double>(d), alpha);
    double k = kappa1(alpha);
    long bad = 0;
    for (long d1 = 1; d1 <= n; ++d1) {
        double slope = pw[d1] / d1;
        for (long d2 = 1; d2 <= n; ++d2) {
            double lhs = pw[d1 + d2];
            double rhs = pw[d1] + k * std::min(pw[d2], d2 * slope);
            bad += lhs < rhs - 1e-13 * lhs;
        }
    }
    return bad;
}

}  // namespace hopflab
