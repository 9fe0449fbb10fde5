#pragma once

#include <string>
#include <vector>

#include "hopflab/solver.hpp"

namespace hopflab {

struct ScalingRow {
    int m = 2;
    double alpha = 0.5;
    long k = 1;
    double upper = 0;
    double lower = 0;       // closed-form grid bound at the critical exponent, else 0
    double xi_upper = 0;
    double xi_lower = 0;
    double seconds = 0;
    double flux_lower = 0;  // flux bound of the same point set
    std::string method;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
};

constexpr double kMaxGridPoints = 1e5;

ScalingReport run_scaling(int m, double alpha, const std::vector<long>& ks, const SolveOptions& options);

struct SingularityReport {
    long k = 1;
    std::vector<Point> points;
    BoxDomain box;
    double lower = 0;       // closed-form grid bound, scaled to the box
    double flux_lower = 0;  // flux bound on the same points
    double upper = 0;       // dyadic construction
    double ratio = 0;       // lower / k^3
    double certified_ratio = 0;  // max(lower, flux_lower) / k^3
};

SingularityReport singularity_grid(long k);

struct BudgetSeries {
    long N = 2;
    double c = 0;
    double S1 = 0, S2 = 0, S3 = 0;
    double S1_limit = 0.125;
    double S2_tail = 0;  // integral estimate of the remainder after N
    double S3_floor = 0; // c (log log N - log log 3)
};

BudgetSeries budget_series(long N);

// Partial sums at several cut-offs from one pass.
std::vector<BudgetSeries> budget_series_at(const std::vector<long>& cutoffs);

void emit_csv(const ScalingReport& report, const std::string& path);
void emit_json(const ScalingReport& report, const std::string& path);
std::string report_csv(const ScalingReport& report);
nlohmann::json report_json(const ScalingReport& report);

}  // namespace hopflab
