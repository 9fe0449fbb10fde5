#include "hopflab/transport_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <unordered_map>

#include "hopflab/errors.hpp"

namespace hopflab {

namespace {

// Hash of vertex positions on a coarse lattice; lookups scan the neighbouring cells.
class VertexIndex {
public:
    explicit VertexIndex(int dim) : dim_(dim) {}

    void insert(int id, const Point& p) { cells_[key(cell_of(p))].push_back({id, p}); }

    std::optional<int> find(const Point& p) const {
        auto c = cell_of(p);
        std::optional<int> hit;
        double best = kVertexTol;
        visit(c, 0, [&](long long k) {
            auto it = cells_.find(k);
            if (it == cells_.end()) return;
            for (const auto& [id, q] : it->second) {
                double d = distance(p, q);
                if (d <= best && (!hit || d < best || id < *hit)) {
                    best = d;
                    hit = id;
                }
            }
        });
        return hit;
    }

private:
    static constexpr double kCell = 1e-6;
    using Cell = std::array<long long, kMaxDim>;

    Cell cell_of(const Point& p) const {
        Cell c{};
        for (int i = 0; i < dim_; ++i) c[i] = static_cast<long long>(std::floor(p[i] / kCell));
        return c;
    }
    static long long key(const Cell& c) {
        unsigned long long h = 1469598103934665603ULL;
        for (auto v : c) {
            h ^= static_cast<unsigned long long>(v);
            h *= 1099511628211ULL;
        }
        return static_cast<long long>(h);
    }
    template <class F>
    void visit(Cell c, int axis, F&& f) const {
        if (axis == dim_) {
            f(key(c));
            return;
        }
        for (int o = -1; o <= 1; ++o) {
            Cell n = c;
            n[axis] += o;
            visit(n, axis + 1, f);
        }
    }

    int dim_;
    std::unordered_map<long long, std::vector<std::pair<int, Point>>> cells_;
};

VertexIndex index_of(const TransportGraph& g) {
    VertexIndex idx(g.dim);
    for (const auto& [id, p] : g.vertices) idx.insert(id, p);
    return idx;
}

using EdgeKey = std::pair<int, int>;

std::map<EdgeKey, long> edge_map(const TransportGraph& g) {
    std::map<EdgeKey, long> m;
    for (const auto& e : g.edges) m[{e.tail, e.head}] += e.d;
    return m;
}

// true when the segments share a collinear stretch of positive length
bool collinear_overlap(const Point& a0, const Point& a1, const Point& b0, const Point& b1) {
    double len = distance(a0, a1);
    if (len <= kVertexTol) return false;
    Point u{};
    for (int i = 0; i < kMaxDim; ++i) u[i] = (a1[i] - a0[i]) / len;
    auto offline = [&](const Point& p, double& t) {
        t = 0;
        for (int i = 0; i < kMaxDim; ++i) t += (p[i] - a0[i]) * u[i];
        double s = 0;
        for (int i = 0; i < kMaxDim; ++i) {
            double r = p[i] - a0[i] - t * u[i];
            s += r * r;
        }
        return std::sqrt(s);
    };
    double t0, t1;
    if (offline(b0, t0) > kVertexTol || offline(b1, t1) > kVertexTol) return false;
    double lo = std::max(0.0, std::min(t0, t1));
    double hi = std::min(len, std::max(t0, t1));
    return hi - lo > kVertexTol;
}

}  // namespace

std::vector<int> TransportGraph::sources() const {
    std::vector<int> out;
    for (const auto& [id, q] : charge)
        if (q > 0) out.push_back(id);
    return out;
}

std::vector<int> TransportGraph::sinks() const {
    std::vector<int> out;
    for (const auto& [id, q] : charge)
        if (q < 0) out.push_back(id);
    return out;
}

int TransportGraph::next_id() const { return vertices.empty() ? 0 : vertices.rbegin()->first + 1; }

int TransportGraph::add_vertex(const Point& p) {
    int id = next_id();
    vertices[id] = p;
    return id;
}

std::optional<int> TransportGraph::find_vertex(const Point& p) const {
    for (const auto& [id, q] : vertices)
        if (distance(p, q) <= kVertexTol) return id;
    return std::nullopt;
}

int TransportGraph::find_or_add_vertex(const Point& p) {
    if (auto id = find_vertex(p)) return *id;
    return add_vertex(p);
}

double TransportGraph::edge_length(const Edge& e) const { return distance(vertices.at(e.tail), vertices.at(e.head)); }

bool TransportGraph::is_boundary(int id) const { return domain && domain->on_boundary(vertices.at(id)); }

void TransportGraph::canonicalize() {
    auto m = edge_map(*this);
    edges.clear();
    for (const auto& [k, d] : m) edges.push_back({k.first, k.second, d});
    for (auto it = charge.begin(); it != charge.end();) {
        if (it->second == 0)
            it = charge.erase(it);
        else
            ++it;
    }
}

long ChargedConfig::positive_total() const {
    long s = 0;
    for (std::size_t i = 0; i < positives.size(); ++i) s += i < positive_mag.size() ? positive_mag[i] : 1;
    return s;
}

long ChargedConfig::negative_total() const {
    long s = 0;
    for (std::size_t i = 0; i < negatives.size(); ++i) s += i < negative_mag.size() ? negative_mag[i] : 1;
    return s;
}

void ChargedConfig::check() const {
    if (!positive_mag.empty() && positive_mag.size() != positives.size()) throw InputError("positive magnitudes do not match points");
    if (!negative_mag.empty() && negative_mag.size() != negatives.size()) throw InputError("negative magnitudes do not match points");
    for (long m : positive_mag)
        if (m < 1) throw InputError("charge magnitudes must be >= 1");
    for (long m : negative_mag)
        if (m < 1) throw InputError("charge magnitudes must be >= 1");
    std::vector<Point> all = positives;
    all.insert(all.end(), negatives.begin(), negatives.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j)
            if (distance(all[i], all[j]) <= kVertexTol) throw InputError("charged points must be distinct");
        if (domain && !domain->contains(all[i])) throw InputError("charged point outside the domain");
    }
}

ValidationReport validate(const TransportGraph& g) {
    ValidationReport rep;
    auto bad_vertex = [&](int id, const std::string& msg) {
        rep.bad_vertices.push_back(id);
        rep.messages.push_back("vertex " + std::to_string(id) + ": " + msg);
    };
    auto bad_edge = [&](std::size_t i, const std::string& msg) {
        rep.bad_edges.push_back(i);
        rep.messages.push_back("edge " + std::to_string(i) + ": " + msg);
    };
    if (g.domain && g.domain->dim != g.dim) rep.messages.push_back("domain dimension differs from graph dimension");

    std::map<int, long> balance;
    std::set<EdgeKey> seen;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const Edge& e = g.edges[i];
        if (!g.vertices.count(e.tail) || !g.vertices.count(e.head)) {
            bad_edge(i, "unknown endpoint");
            continue;
        }
        if (e.d < 1) bad_edge(i, "multiplicity below 1");
        if (g.edge_length(e) <= kVertexTol) bad_edge(i, "zero length");
        if (!seen.insert({e.tail, e.head}).second) bad_edge(i, "duplicate edge");
        if (seen.count({e.head, e.tail})) bad_edge(i, "anti-parallel pair");
        balance[e.tail] += e.d;
        balance[e.head] -= e.d;
    }

    VertexIndex idx(g.dim);
    for (const auto& [id, p] : g.vertices) {
        if (auto other = idx.find(p)) bad_vertex(id, "coincides with vertex " + std::to_string(*other));
        idx.insert(id, p);
        if (g.domain && !g.domain->contains(p)) bad_vertex(id, "outside the domain");
    }
    for (const auto& [id, q] : g.charge) {
        if (!g.vertices.count(id)) {
            rep.messages.push_back("charge on unknown vertex " + std::to_string(id));
            continue;
        }
        (void)q;
    }
    for (const auto& [id, p] : g.vertices) {
        if (g.domain && g.domain->on_boundary(p)) continue;
        long q = g.charge.count(id) ? g.charge.at(id) : 0;
        long net = balance.count(id) ? balance.at(id) : 0;
        if (net != q) bad_vertex(id, "unbalanced: out - in = " + std::to_string(net) + ", charge " + std::to_string(q));
    }
    return rep;
}

TransportGraph glue(const TransportGraph& g1, const TransportGraph& g2) {
    if (g1.dim != g2.dim && !g1.vertices.empty() && !g2.vertices.empty())
        throw InputError("cannot glue graphs of different dimension");
    TransportGraph out = g1;
    if (g1.vertices.empty()) {
        out.dim = g2.dim;
        if (!out.domain) out.domain = g2.domain;
    }
    auto idx = index_of(out);
    std::map<int, int> remap;
    for (const auto& [id, p] : g2.vertices) {
        if (auto hit = idx.find(p)) {
            remap[id] = *hit;
        } else {
            int nid = out.add_vertex(p);
            idx.insert(nid, p);
            remap[id] = nid;
        }
    }
    for (const auto& [id, q] : g2.charge) {
        int nid = remap.at(id);
        if (out.charge.count(nid) && out.charge.at(nid) != 0) throw InputError("glued graphs share a charged point");
        out.charge[nid] += q;
    }
    auto m1 = edge_map(g1);
    auto m = m1;
    for (const auto& e : g2.edges) {
        EdgeKey k{remap.at(e.tail), remap.at(e.head)};
        if (m1.count({k.second, k.first})) throw InputError("gluing would create an anti-parallel edge pair");
        if (!m1.count(k)) {
            const Point& b0 = out.vertices.at(k.first);
            const Point& b1 = out.vertices.at(k.second);
            for (const auto& [k1, d1] : m1) {
                (void)d1;
                if (collinear_overlap(out.vertices.at(k1.first), out.vertices.at(k1.second), b0, b1))
                    throw InputError("glued edges overlap without being identical");
            }
        }
        m[k] += e.d;
    }
    out.edges.clear();
    for (const auto& [k, d] : m) out.edges.push_back({k.first, k.second, d});
    return out;
}

TransportGraph subtract(const TransportGraph& ga, const TransportGraph& gb) {
    auto idx = index_of(ga);
    std::map<int, int> remap;
    for (const auto& [id, p] : gb.vertices) {
        auto hit = idx.find(p);
        if (!hit) throw InputError("subtracted graph has a vertex not in the first graph");
        remap[id] = *hit;
    }
    auto m = edge_map(ga);
    for (const auto& e : gb.edges) {
        EdgeKey k{remap.at(e.tail), remap.at(e.head)};
        auto it = m.find(k);
        if (it == m.end() || it->second < e.d) throw InputError("not a subgraph: edge multiplicity exceeds the first graph");
        it->second -= e.d;
    }
    TransportGraph out;
    out.dim = ga.dim;
    out.domain = ga.domain;
    out.charge = ga.charge;
    for (const auto& [id, q] : gb.charge) {
        int nid = remap.at(id);
        long have = out.charge.count(nid) ? out.charge.at(nid) : 0;
        if ((q > 0 && have < q) || (q < 0 && have > q)) throw InputError("not a subgraph: charge not contained");
        out.charge[nid] = have - q;
    }
    std::set<int> used;
    for (const auto& [k, d] : m) {
        if (d == 0) continue;
        out.edges.push_back({k.first, k.second, d});
        used.insert(k.first);
        used.insert(k.second);
    }
    for (auto it = out.charge.begin(); it != out.charge.end();) {
        if (it->second == 0) {
            it = out.charge.erase(it);
        } else {
            used.insert(it->first);
            ++it;
        }
    }
    for (int id : used) out.vertices[id] = ga.vertices.at(id);
    return out;
}

TransportGraph restrict_to(const TransportGraph& g, const BoxDomain& sub) {
    TransportGraph out;
    out.dim = g.dim;
    out.domain = sub;
    VertexIndex idx(g.dim);
    auto vertex_at = [&](const Point& p) {
        if (auto hit = idx.find(p)) return *hit;
        int id = out.add_vertex(p);
        idx.insert(id, p);
        return id;
    };
    // original ids are kept for vertices inside sub, in id order
    for (const auto& [id, p] : g.vertices) {
        if (sub.contains(p)) {
            out.vertices[id] = p;
            idx.insert(id, p);
        }
    }
    for (const auto& [id, q] : g.charge) {
        if (out.vertices.count(id)) out.charge[id] = q;
    }
    std::map<EdgeKey, long> m;
    for (const auto& e : g.edges) {
        const Point& a = g.vertices.at(e.tail);
        const Point& b = g.vertices.at(e.head);
        double t0 = 0, t1 = 1;
        bool empty = false;
        for (int i = 0; i < sub.dim && !empty; ++i) {
            double da = b[i] - a[i];
            if (std::abs(da) < 1e-15) {
                if (a[i] < sub.lo[i] - kVertexTol || a[i] > sub.hi[i] + kVertexTol) empty = true;
                continue;
            }
            double ta = (sub.lo[i] - a[i]) / da, tb = (sub.hi[i] - a[i]) / da;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) empty = true;
        }
        if (empty) continue;
        Point p0 = t0 <= 0 ? a : lerp(a, b, t0);
        Point p1 = t1 >= 1 ? b : lerp(a, b, t1);
        if (distance(p0, p1) <= kVertexTol) continue;
        int u = t0 <= 0 ? e.tail : vertex_at(p0);
        int v = t1 >= 1 ? e.head : vertex_at(p1);
        if (!out.vertices.count(u)) u = vertex_at(p0);
        if (!out.vertices.count(v)) v = vertex_at(p1);
        m[{u, v}] += e.d;
    }
    for (const auto& [k, d] : m) out.edges.push_back({k.first, k.second, d});
    // drop vertices with no role left
    std::set<int> used;
    for (const auto& e : out.edges) {
        used.insert(e.tail);
        used.insert(e.head);
    }
    for (const auto& [id, q] : out.charge) used.insert(id);
    for (auto it = out.vertices.begin(); it != out.vertices.end();) {
        if (!used.count(it->first))
            it = out.vertices.erase(it);
        else
            ++it;
    }
    return out;
}

namespace {

struct Walker {
    const TransportGraph& g;
    std::map<int, std::vector<std::pair<int, long*>>> out;  // sorted by head id
    std::map<EdgeKey, long> rem;
    std::map<int, long> sink_left;

    explicit Walker(const TransportGraph& graph) : g(graph) {
        for (const auto& e : g.edges) rem[{e.tail, e.head}] += e.d;
        for (auto& [k, d] : rem) out[k.first].push_back({k.second, &d});
        for (auto& [v, lst] : out) std::sort(lst.begin(), lst.end());
        for (const auto& [id, q] : g.charge)
            if (q < 0) sink_left[id] = -q;
    }

    bool terminal(int v) {
        if (g.is_boundary(v)) return true;
        auto it = sink_left.find(v);
        if (it != sink_left.end() && it->second > 0) {
            --it->second;
            return true;
        }
        return false;
    }

    std::optional<int> step(int v) {
        auto it = out.find(v);
        if (it == out.end()) return std::nullopt;
        for (auto& [h, r] : it->second) {
            if (*r > 0) {
                --*r;
                return h;
            }
        }
        return std::nullopt;
    }

    bool has_out(int v) const {
        auto it = out.find(v);
        if (it == out.end()) return false;
        for (const auto& pr : it->second)
            if (*pr.second > 0) return true;
        return false;
    }

    // Walks from `start` until `stop` accepts a vertex; cycles met on the way are cut out into `loops`.
    template <class Stop>
    std::vector<int> walk(int start, Stop&& stop, std::vector<Thread>& loops) {
        std::vector<int> path{start};
        std::map<int, std::size_t> pos{{start, 0}};
        int v = start;
        while (true) {
            auto h = step(v);
            if (!h) throw InputError("decompose: walk stuck at vertex " + std::to_string(v) + "; graph is not balanced");
            int w = *h;
            if (stop(w)) {
                path.push_back(w);
                return path;
            }
            auto it = pos.find(w);
            if (it != pos.end()) {
                Thread loop;
                loop.kind = Thread::Kind::closed_loop;
                loop.path.assign(path.begin() + static_cast<long>(it->second), path.end());
                loop.path.push_back(w);
                loops.push_back(loop);
                for (std::size_t i = it->second + 1; i < path.size(); ++i) pos.erase(path[i]);
                path.resize(it->second + 1);
                v = w;
                continue;
            }
            path.push_back(w);
            pos[w] = path.size() - 1;
            v = w;
        }
    }
};

}  // namespace

Decomposition decompose(const TransportGraph& g) {
    auto rep = validate(g);
    if (!rep.ok()) throw InputError("decompose needs a valid graph: " + rep.messages.front());
    Decomposition dec;
    Walker w(g);
    for (const auto& [src, q] : g.charge) {
        if (q <= 0) continue;
        for (long u = 0; u < q; ++u) {
            Thread t;
            if (g.is_boundary(src)) {
                t.path = {src};
            } else {
                t.path = w.walk(src, [&](int v) { return w.terminal(v); }, dec.loops);
            }
            dec.threads[src].push_back(t);
        }
    }
    for (const auto& [id, p] : g.vertices) {
        (void)p;
        if (!g.is_boundary(id)) continue;
        while (w.has_out(id)) {
            Thread t;
            t.kind = Thread::Kind::boundary_loop;
            t.path = w.walk(id, [&](int v) { return g.is_boundary(v); }, dec.loops);
            dec.loops.push_back(t);
        }
    }
    for (const auto& e : g.edges) {
        while (w.rem.at({e.tail, e.head}) > 0) {
            int start = e.tail;
            Thread t;
            t.kind = Thread::Kind::closed_loop;
            t.path = w.walk(start, [&](int v) { return v == start; }, dec.loops);
            dec.loops.push_back(t);
        }
    }
    return dec;
}

TransportGraph reassemble(const TransportGraph& g, const Decomposition& dec) {
    TransportGraph out;
    out.dim = g.dim;
    out.domain = g.domain;
    std::map<EdgeKey, long> m;
    std::set<int> used;
    auto add_path = [&](const std::vector<int>& path) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) m[{path[i], path[i + 1]}] += 1;
        used.insert(path.begin(), path.end());
    };
    for (const auto& [src, ts] : dec.threads) {
        for (const auto& t : ts) {
            add_path(t.path);
            out.charge[src] += 1;
            // a thread ending at a sink carries one unit of its negative charge
            int end = t.path.back();
            if (g.charge.count(end) && g.charge.at(end) < 0 && !g.is_boundary(end)) out.charge[end] -= 1;
        }
    }
    for (const auto& l : dec.loops) add_path(l.path);
    for (const auto& [k, d] : m) out.edges.push_back({k.first, k.second, d});
    for (const auto& [id, q] : out.charge) used.insert(id);
    for (int id : used) out.vertices[id] = g.vertices.at(id);
    out.canonicalize();
    return out;
}

long boundary_flux(const TransportGraph& g) {
    long flux = 0;
    for (const auto& e : g.edges) {
        if (g.is_boundary(e.head)) flux += e.d;
        if (g.is_boundary(e.tail)) flux -= e.d;
    }
    return flux;
}

namespace {

using Key = std::vector<long long>;

Key rounded(const Point& p, int dim) {
    Key k;
    for (int i = 0; i < dim; ++i) k.push_back(std::llround(p[i] * 1e7));
    return k;
}

}  // namespace

bool same_geometry(const TransportGraph& a, const TransportGraph& b, double tol) {
    (void)tol;
    auto sig = [](const TransportGraph& g) {
        std::map<std::pair<Key, Key>, long> edges;
        for (const auto& e : g.edges)
            edges[{rounded(g.vertices.at(e.tail), g.dim), rounded(g.vertices.at(e.head), g.dim)}] += e.d;
        std::map<Key, long> charges;
        for (const auto& [id, q] : g.charge)
            if (q != 0) charges[rounded(g.vertices.at(id), g.dim)] += q;
        return std::make_pair(edges, charges);
    };
    return a.dim == b.dim && sig(a) == sig(b);
}

nlohmann::json graph_to_json(const TransportGraph& g) {
    nlohmann::json j;
    j["dim"] = g.dim;
    auto vs = nlohmann::json::array();
    for (const auto& [id, p] : g.vertices) vs.push_back({{"id", id}, {"p", point_to_json(p, g.dim)}});
    j["vertices"] = vs;
    std::vector<Edge> es = g.edges;
    std::sort(es.begin(), es.end(), [](const Edge& x, const Edge& y) { return std::tie(x.tail, x.head) < std::tie(y.tail, y.head); });
    auto ej = nlohmann::json::array();
    for (const auto& e : es) ej.push_back({{"tail", e.tail}, {"head", e.head}, {"d", e.d}});
    j["edges"] = ej;
    auto src = nlohmann::json::array();
    bool unit = true;
    for (const auto& [id, q] : g.charge) {
        if (q == 1) src.push_back(id);
        if (q != 1) unit = false;
    }
    j["sources"] = src;
    if (!unit) {
        auto cj = nlohmann::json::array();
        for (const auto& [id, q] : g.charge)
            if (q != 1) cj.push_back({{"id", id}, {"q", q}});
        j["charges"] = cj;
    }
    j["domain"] = g.domain ? nlohmann::json(*g.domain) : nlohmann::json(nullptr);
    return j;
}

TransportGraph graph_from_json(const nlohmann::json& j) {
    TransportGraph g;
    try {
        g.dim = j.at("dim").get<int>();
        if (g.dim < 1 || g.dim > kMaxDim) throw InputError("graph dimension must be in 1..4");
        for (const auto& v : j.at("vertices")) {
            int id = v.at("id").get<int>();
            if (g.vertices.count(id)) throw InputError("duplicate vertex id " + std::to_string(id));
            g.vertices[id] = point_from_json(v.at("p"), g.dim);
        }
        for (const auto& e : j.at("edges")) g.edges.push_back({e.at("tail").get<int>(), e.at("head").get<int>(), e.at("d").get<long>()});
        for (const auto& s : j.value("sources", nlohmann::json::array())) g.charge[s.get<int>()] += 1;
        for (const auto& c : j.value("charges", nlohmann::json::array())) g.charge[c.at("id").get<int>()] += c.at("q").get<long>();
        if (j.contains("domain") && !j.at("domain").is_null()) g.domain = j.at("domain").get<BoxDomain>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad graph json: ") + e.what());
    }
    return g;
}

}  // namespace hopflab
