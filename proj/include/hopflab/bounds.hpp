#pragma once

#include <map>
#include <vector>

#include "hopflab/cost_models.hpp"

namespace hopflab {

double partition_lower_bound(const std::vector<double>& values);

double decomposition_lower_bound(double L1, double L2, double mu1, long N, double dist, double alpha);

// one step of the grid recursion: xi(qk) >= q^{m(1-alpha)-1} xi(k) + kappa1/(4q)
double crazy_step(double xi_k, int m, double alpha, int q);

struct GridBoundParams {
    int m = 2;
    long k = 1;
    int q = 0;  // 0 searches q = 4..16
};

struct GridBound {
    double lambda = 0;
    double xi = 0;
    int q = 4;
    long ell = 0;
};

// critical exponent 1 - 1/m
double critical_alpha(int m);

// largest ell with q^ell <= k
long floor_log(long k, int q);

GridBound grid_lower_bound(const GridBoundParams& params);

// Lower bound from flux through the level sets of the distance to the boundary:
// sum over depths t_i (decreasing) of (t_i - t_{i+1}) * cost(i).
double flux_lower_bound(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model);

double charged_lower_bound(const ChargedConfig& config, const std::vector<BoxDomain>& protected_boxes,
                           const std::vector<double>& per_box_values);

struct ScalingViolation {
    long k_small = 0;
    long k_large = 0;
    double lhs = 0;  // lambda(k_small)
    double rhs = 0;  // (k_large/k_small) lambda(k_large)
};

// checks lambda(k') <= (k/k') lambda(k) for every k' < k
std::vector<ScalingViolation> scaling_consistency(const std::map<long, double>& lambda_values);

}  // namespace hopflab
