#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopflab/domain.hpp"

namespace hopflab {

struct Edge {
    int tail = 0;
    int head = 0;
    long d = 1;

    bool operator==(const Edge&) const = default;
};

// Directed geometric graph with integer multiplicities.
// Unit positive charges are the sources; other charges (sinks, heavier points) live in `charge`.
struct TransportGraph {
    int dim = 2;
    std::map<int, Point> vertices;
    std::vector<Edge> edges;
    std::map<int, long> charge;
    std::optional<BoxDomain> domain;  // empty means all of space

    std::vector<int> sources() const;  // ids with positive charge
    std::vector<int> sinks() const;    // ids with negative charge
    void add_source(int id, long q = 1) { charge[id] += q; }

    int add_vertex(const Point& p);          // fresh id
    int find_or_add_vertex(const Point& p);  // reuses a vertex within kVertexTol
    std::optional<int> find_vertex(const Point& p) const;
    int next_id() const;

    double edge_length(const Edge& e) const;
    bool is_boundary(int id) const;

    // vertices sorted by id, edges by (tail, head)
    void canonicalize();
};

// Signed point charges; magnitudes default to 1. No domain means all of space.
struct ChargedConfig {
    int dim = 2;
    std::vector<Point> positives;
    std::vector<Point> negatives;
    std::vector<long> positive_mag;
    std::vector<long> negative_mag;
    std::optional<BoxDomain> domain;

    long positive_total() const;
    long negative_total() const;
    void check() const;
};

struct ValidationReport {
    std::vector<int> bad_vertices;
    std::vector<std::size_t> bad_edges;
    std::vector<std::string> messages;

    bool ok() const { return messages.empty(); }
};

ValidationReport validate(const TransportGraph& g);

TransportGraph glue(const TransportGraph& g1, const TransportGraph& g2);
TransportGraph subtract(const TransportGraph& ga, const TransportGraph& gb);
TransportGraph restrict_to(const TransportGraph& g, const BoxDomain& sub);

struct Thread {
    enum class Kind { thread, closed_loop, boundary_loop };
    Kind kind = Kind::thread;
    std::vector<int> path;  // vertex ids, first to last
};

struct Decomposition {
    std::map<int, std::vector<Thread>> threads;  // one per unit of source charge
    std::vector<Thread> loops;
};

Decomposition decompose(const TransportGraph& g);

// Rebuilds a graph from paths of unit multiplicity over g's vertices.
TransportGraph reassemble(const TransportGraph& g, const Decomposition& dec);

// inflow to boundary vertices minus outflow from them
long boundary_flux(const TransportGraph& g);

// Geometry-only equality: segments with multiplicities and charged points, ignoring ids.
bool same_geometry(const TransportGraph& a, const TransportGraph& b, double tol = kVertexTol);

nlohmann::json graph_to_json(const TransportGraph& g);
TransportGraph graph_from_json(const nlohmann::json& j);

}  // namespace hopflab
