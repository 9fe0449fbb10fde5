#pragma once

#include <string>

#include "hopflab/transport_graph.hpp"

namespace hopflab {

constexpr double kCostTol = 1e-9;

struct CostModel {
    enum class Kind { power_law, nu3, nu2_upper };

    Kind kind = Kind::power_law;
    double alpha = 1.0;  // exponent for power_law
    double cnu = 1.0;    // constant for nu2_upper

    static CostModel power_law(double alpha);
    static CostModel nu3();
    static CostModel nu2_upper(double cnu = 1.0);
    // "alpha:0.75", "nu3", "nu2:Cnu=1.0"
    static CostModel parse(const std::string& spec);

    double cost(long d) const;
    // exponent of the power-law part: alpha, 1 for nu3, 3/4 for nu2
    double exponent() const;
    std::string spec() const;
};

double w_alpha(const TransportGraph& g, const CostModel& model);

double kappa1(double alpha);

bool concavity_holds(long d1, long d2, double alpha);

// Counts failures of the concavity inequality over {1..n}^2.
long concavity_violations(double alpha, long n);

}  // namespace hopflab
