#pragma once

#include <random>
#include <vector>

#include "hopflab/transport_graph.hpp"

namespace fixtures {

using hopflab::Point;
using hopflab::TransportGraph;

// Path graph with unit multiplicity; the first vertex is a source when `source` is set.
inline TransportGraph path_graph(const std::vector<Point>& pts, bool source, int dim = 2) {
    TransportGraph g;
    g.dim = dim;
    g.domain = hopflab::BoxDomain::unit(dim);
    int prev = g.find_or_add_vertex(pts[0]);
    if (source) g.add_source(prev);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        int cur = g.find_or_add_vertex(pts[i]);
        g.edges.push_back({prev, cur, 1});
        prev = cur;
    }
    return g;
}

// Monotone lattice walk on the n x n grid of the unit square: steps go -y or +x until the boundary.
inline std::vector<Point> lattice_walk(int ix, int iy, int n, std::mt19937_64& rng) {
    std::vector<Point> pts{{double(ix) / n, double(iy) / n}};
    while (ix > 0 && ix < n && iy > 0 && iy < n) {
        if (rng() % 2) ++ix; else --iy;
        pts.push_back({double(ix) / n, double(iy) / n});
    }
    return pts;
}

struct Instance {
    std::vector<TransportGraph> threads;  // one per source
    std::vector<TransportGraph> loops;    // boundary to boundary
    int sources = 0;
};

// Up to 8 sources on distinct interior lattice nodes, plus an occasional boundary loop.
inline Instance random_instance(std::mt19937_64& rng) {
    const int n = 8;
    Instance inst;
    int count = 1 + static_cast<int>(rng() % 8);
    std::vector<std::pair<int, int>> used;
    while (static_cast<int>(inst.threads.size()) < count) {
        int ix = 1 + static_cast<int>(rng() % (n - 1)), iy = 1 + static_cast<int>(rng() % (n - 1));
        bool dup = false;
        for (auto& u : used) dup |= u.first == ix && u.second == iy;
        if (dup) continue;
        used.push_back({ix, iy});
        inst.threads.push_back(path_graph(lattice_walk(ix, iy, n, rng), true));
    }
    inst.sources = count;
    if (rng() % 3 == 0) {
        int iy = 1 + static_cast<int>(rng() % (n - 1));
        std::vector<Point> pts{{0.0, double(iy) / n}};
        auto rest = lattice_walk(1, iy, n, rng);
        pts.insert(pts.end(), rest.begin(), rest.end());
        inst.loops.push_back(path_graph(pts, false));
    }
    return inst;
}

inline TransportGraph glue_all(const std::vector<TransportGraph>& parts) {
    TransportGraph g;
    g.dim = 2;
    g.domain = hopflab::BoxDomain::unit(2);
    for (const auto& p : parts) g = hopflab::glue(g, p);
    return g;
}

}  // namespace fixtures
