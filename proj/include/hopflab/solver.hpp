#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopflab/bounds.hpp"

namespace hopflab {

// Counter-based generator: every draw is a pure function of (key, counter).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter + 0x9e3779b97f4a7c15ULL)); }
    double uniform(std::uint64_t counter) const { return (bits(counter) >> 11) * 0x1.0p-53; }
    CounterRng split(std::uint64_t stream) const {
        CounterRng r;
        r.key_ = mix(key_ + 0xbb67ae8584caa73bULL * (stream + 1));
        return r;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
};

struct SolveOptions {
    std::uint64_t seed = 0;
    int resolution = 9;
    int iterations = 2000;
    int restarts = 2;
    double tolerance = 1e-9;
};

struct Solution {
    TransportGraph graph;
    double value = 0;
    std::string method;
    std::optional<double> lower_bound;
};

Solution star_baseline(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model);

Solution dyadic_construction(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model);

Solution local_search(const Solution& start, const CostModel& model, const SolveOptions& options);

// Exact optimum over routings on the lattice with `options.resolution` nodes per axis
// (neighbours differ by at most one step on every axis). Points must be lattice nodes.
double oracle_exact(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model,
                    const SolveOptions& options);

Solution solve_brbd(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model,
                    const SolveOptions& options);

Solution solve_charged(const ChargedConfig& config, const CostModel& model, const SolveOptions& options);

// Sum over protected boxes of the flux bound of the positives inside each box.
double protected_lower_bound(const ChargedConfig& config, const std::vector<BoxDomain>& boxes, const CostModel& model);

nlohmann::json solution_to_json(const Solution& s, const CostModel& model);

}  // namespace hopflab
