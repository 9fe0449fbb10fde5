#include "hopflab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hopflab/errors.hpp"

namespace hopflab {

double partition_lower_bound(const std::vector<double>& values) {
    double s = 0;
    for (double v : values) {
        if (v < 0) throw InputError("part lower bounds must be nonnegative");
        s += v;
    }
    return s;
}

double decomposition_lower_bound(double L1, double L2, double mu1, long N, double dist, double alpha) {
    if (L1 < 0 || L2 < 0 || mu1 < 0 || N < 0 || dist < 0) throw InputError("decomposition bound needs nonnegative inputs");
    if (mu1 > 1) throw InputError("mu1 must not exceed 1");
    return L1 + L2 + kappa1(alpha) * mu1 * std::pow(static_cast<double>(N), alpha) * dist;
}

double crazy_step(double xi_k, int m, double alpha, int q) {
    if (xi_k < 0) throw InputError("xi must be nonnegative");
    if (q < 4) throw InputError("subdivision factor q must be >= 4");
    return std::pow(static_cast<double>(q), m * (1 - alpha) - 1) * xi_k + kappa1(alpha) / (4.0 * q);
}

double critical_alpha(int m) {
    if (m < 2) throw InputError("critical exponent needs m >= 2");
    return 1.0 - 1.0 / m;
}

long floor_log(long k, int q) {
    long ell = 0;
    long p = q;
    while (p <= k) {
        ++ell;
        if (p > k / q) break;
        p *= q;
    }
    return ell;
}

GridBound grid_lower_bound(const GridBoundParams& params) {
    if (params.k < 1) throw InputError("grid bound needs k >= 1");
    if (params.q != 0 && params.q < 4) throw InputError("subdivision factor q must be >= 4");
    double alpha = critical_alpha(params.m);
    double kap = kappa1(alpha);
    GridBound best;
    best.q = params.q ? params.q : 4;
    int qlo = params.q ? params.q : 4, qhi = params.q ? params.q : 16;
    for (int q = qlo; q <= qhi; ++q) {
        long ell = floor_log(params.k, q);
        double xi = std::pow(static_cast<double>(q), -params.m) * (kap / (4.0 * q)) * static_cast<double>(ell);
        if (xi > best.xi) {
            best.xi = xi;
            best.q = q;
            best.ell = ell;
        }
    }
    best.lambda = best.xi * std::pow(static_cast<double>(params.k), params.m - 1);
    return best;
}

double flux_lower_bound(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model) {
    std::vector<double> depth;
    for (const auto& p : points) depth.push_back(dist_to_boundary(p, box));
    std::sort(depth.begin(), depth.end(), std::greater<>());
    double s = 0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        double next = i + 1 < depth.size() ? depth[i + 1] : 0.0;
        s += (depth[i] - next) * model.cost(static_cast<long>(i + 1));
    }
    return s;
}

double charged_lower_bound(const ChargedConfig& config, const std::vector<BoxDomain>& protected_boxes,
                           const std::vector<double>& per_box_values) {
    if (protected_boxes.size() != per_box_values.size()) throw InputError("one value per protected box is required");
    for (std::size_t i = 0; i < protected_boxes.size(); ++i) {
        const auto& b = protected_boxes[i];
        for (const auto& q : config.negatives) {
            if (b.contains(q, 0.0)) throw InputError("negative charge inside a protected box");
        }
        for (std::size_t j = i + 1; j < protected_boxes.size(); ++j) {
            const auto& c = protected_boxes[j];
            bool apart = false;
            for (int a = 0; a < b.dim; ++a) apart = apart || b.hi[a] <= c.lo[a] || c.hi[a] <= b.lo[a];
            if (!apart) throw InputError("protected boxes overlap");
        }
    }
    return partition_lower_bound(per_box_values);
}

std::vector<ScalingViolation> scaling_consistency(const std::map<long, double>& lambda_values) {
    std::vector<ScalingViolation> out;
    for (auto i = lambda_values.begin(); i != lambda_values.end(); ++i) {
        for (auto j = std::next(i); j != lambda_values.end(); ++j) {
            double rhs = static_cast<double>(j->first) / i->first * j->second;
            if (i->second > rhs + 1e-9) out.push_back({i->first, j->first, i->second, rhs});
        }
    }
    return out;
}

}  // namespace hopflab
