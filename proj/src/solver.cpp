#include "hopflab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "hopflab/errors.hpp"
#include "hopflab/format.hpp"

namespace hopflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Key = std::array<long long, kMaxDim>;

Key point_key(const Point& p) {
    Key k{};
    for (int i = 0; i < kMaxDim; ++i) k[i] = std::llround(p[i] / kVertexTol);
    return k;
}

// Distinct points with their multiplicities, in first-seen order.
std::vector<std::pair<Point, long>> merge_points(const std::vector<Point>& points) {
    std::vector<std::pair<Point, long>> out;
    std::map<Key, std::size_t> seen;
    for (const auto& p : points) {
        auto [it, fresh] = seen.emplace(point_key(p), out.size());
        if (fresh)
            out.push_back({p, 1});
        else
            ++out[it->second].second;
    }
    return out;
}

void check_points(const std::vector<Point>& points, const BoxDomain& box) {
    for (const auto& p : points)
        if (!box.contains(p)) throw InputError("source point lies outside the domain");
}

// ---------------------------------------------------------------------------
// Arborescence toward the boundary: every interior node has one parent.

struct Node {
    Point p{};
    int parent = -1;
    long supply = 0;
    bool boundary = false;
    bool alive = true;
};

struct Tree {
    BoxDomain box;
    CostModel model;
    std::vector<Node> nodes;
    std::vector<long> flow;
    std::vector<std::vector<int>> children;

    int add(const Point& p, long supply, bool boundary, int parent = -1) {
        nodes.push_back({p, parent, supply, boundary, true});
        return static_cast<int>(nodes.size()) - 1;
    }

    double len(int v) const { return distance(nodes[v].p, nodes[nodes[v].parent].p); }

    double cost_of(long d) const { return d > 0 ? model.cost(d) : 0.0; }

    // rebuilds child lists and flows; throws on a cycle
    void refresh() {
        std::size_t n = nodes.size();
        children.assign(n, {});
        flow.assign(n, 0);
        std::vector<int> roots;
        for (std::size_t v = 0; v < n; ++v) {
            if (!nodes[v].alive) continue;
            if (nodes[v].parent < 0)
                roots.push_back(static_cast<int>(v));
            else
                children[nodes[v].parent].push_back(static_cast<int>(v));
        }
        std::vector<int> order;
        std::vector<int> stack = roots;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            order.push_back(v);
            for (int c : children[v]) stack.push_back(c);
        }
        std::size_t alive = 0;
        for (const auto& nd : nodes) alive += nd.alive;
        if (order.size() != alive) throw NumericalError("routing tree contains a cycle");
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int v = *it;
            flow[v] += nodes[v].supply;
            if (nodes[v].parent >= 0) flow[nodes[v].parent] += flow[v];
        }
    }

    double cost() const {
        double s = 0;
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            if (nodes[v].alive && nodes[v].parent >= 0) s += cost_of(flow[v]) * len(static_cast<int>(v));
        }
        return s;
    }

    bool in_subtree(int u, int v) const {
        for (int w = u; w >= 0; w = nodes[w].parent)
            if (w == v) return true;
        return false;
    }

    // merges degenerate pieces; keeps the value unchanged or lowers it
    void cleanup() {
        double tiny = 1e-13 * std::max(1.0, box.diameter());
        bool changed = true;
        while (changed) {
            changed = false;
            refresh();
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                int v = static_cast<int>(i);
                Node& nd = nodes[v];
                if (!nd.alive) continue;
                if (nd.supply == 0 && children[v].empty() && nd.parent >= 0) {
                    nd.alive = false;
                    changed = true;
                    continue;
                }
                if (nd.supply == 0 && children[v].empty() && nd.boundary) {
                    nd.alive = false;
                    changed = true;
                    continue;
                }
                if (nd.parent >= 0 && !nd.boundary && box.on_boundary(nd.p, tiny)) {
                    nd.boundary = true;
                    nd.parent = -1;
                    changed = true;
                    continue;
                }
                if (nd.parent >= 0 && len(v) <= tiny) {
                    int par = nd.parent;
                    if (nd.supply == 0) {
                        for (int c : children[v]) nodes[c].parent = par;
                        nd.alive = false;
                    } else if (nodes[par].supply == 0 && !nodes[par].boundary) {
                        // the source takes the place of the steiner parent
                        for (int c : children[par])
                            if (c != v) nodes[c].parent = v;
                        nd.parent = nodes[par].parent;
                        nodes[par].alive = false;
                    } else {
                        continue;
                    }
                    changed = true;
                    break;
                }
            }
        }
        refresh();
    }
};

Tree tree_from_points(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model) {
    check_points(points, box);
    Tree t{box, model, {}, {}, {}};
    for (const auto& [p, m] : merge_points(points)) t.add(p, m, box.on_boundary(p));
    return t;
}

TransportGraph tree_to_graph(const Tree& t) {
    TransportGraph g;
    g.dim = t.box.dim;
    g.domain = t.box;
    std::map<Key, int> ids;
    std::vector<int> vid(t.nodes.size(), -1);
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        const Node& nd = t.nodes[v];
        if (!nd.alive) continue;
        if (nd.supply == 0 && t.flow[v] == 0) continue;
        auto key = point_key(nd.p);
        auto it = ids.find(key);
        if (it == ids.end()) it = ids.emplace(key, g.add_vertex(nd.p)).first;
        vid[v] = it->second;
        if (nd.supply > 0) g.add_source(vid[v], nd.supply);
    }
    std::map<std::pair<int, int>, long> m;
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        const Node& nd = t.nodes[v];
        if (!nd.alive || nd.parent < 0 || vid[v] < 0 || t.flow[v] == 0) continue;
        int a = vid[v], b = vid[nd.parent];
        if (a == b) continue;
        m[{a, b}] += t.flow[v];
    }
    for (const auto& [k, d] : m) g.edges.push_back({k.first, k.second, d});
    return g;
}

Solution finish(const Tree& t, const std::string& method) {
    Solution s;
    s.graph = tree_to_graph(t);
    s.value = w_alpha(s.graph, t.model);
    s.method = method;
    return s;
}

// Builds a routing tree from a valid graph; nullopt when the graph does not reduce to one.
std::optional<Tree> tree_from_graph(const TransportGraph& g, const CostModel& model) {
    if (!g.domain) return std::nullopt;
    for (const auto& [id, q] : g.charge)
        if (q < 0) return std::nullopt;
    Tree t{*g.domain, model, {}, {}, {}};
    std::map<int, int> node_of;
    for (const auto& [id, p] : g.vertices) {
        long q = g.charge.count(id) ? g.charge.at(id) : 0;
        node_of[id] = t.add(p, q, g.is_boundary(id));
    }
    std::map<int, std::vector<int>> outs;
    for (const auto& e : g.edges) outs[e.tail].push_back(e.head);
    bool simple = true;
    for (const auto& [id, hs] : outs) simple = simple && hs.size() == 1 && !g.is_boundary(id);
    if (simple) {
        for (const auto& [id, hs] : outs) t.nodes[node_of[id]].parent = node_of[hs.front()];
    } else {
        Decomposition dec = decompose(g);
        for (const auto& [src, ts] : dec.threads) {
            for (const auto& th : ts) {
                for (std::size_t i = 0; i + 1 < th.path.size(); ++i) {
                    Node& nd = t.nodes[node_of[th.path[i]]];
                    if (nd.parent >= 0 || nd.boundary) break;
                    nd.parent = node_of[th.path[i + 1]];
                }
            }
        }
    }
    try {
        t.cleanup();
    } catch (const NumericalError&) {
        return std::nullopt;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Weighted geometric median, optionally with one coordinate pinned.

Point weighted_median(const std::vector<Point>& anchors, const std::vector<double>& w, const Point& start, int dim,
                      int pinned_axis = -1, int* hit_anchor = nullptr) {
    std::size_t n = anchors.size();
    if (hit_anchor) *hit_anchor = -1;
    auto free_axis = [&](int a) { return a != pinned_axis; };
    if (pinned_axis < 0) {
        for (std::size_t j = 0; j < n; ++j) {
            Point r{};
            bool dup = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == j) continue;
                double d = distance(anchors[i], anchors[j]);
                if (d == 0) {
                    dup = true;
                    continue;
                }
                for (int a = 0; a < dim; ++a) r[a] += w[i] * (anchors[i][a] - anchors[j][a]) / d;
            }
            (void)dup;
            double norm = 0;
            for (int a = 0; a < dim; ++a) norm += r[a] * r[a];
            if (std::sqrt(norm) <= w[j]) {
                if (hit_anchor) *hit_anchor = static_cast<int>(j);
                return anchors[j];
            }
        }
    }
    double scale = 0;
    for (const auto& a : anchors) scale = std::max(scale, distance(a, start));
    if (scale == 0) return start;
    Point x = start;
    for (int it = 0; it < 200; ++it) {
        Point num{};
        double den = 0;
        bool degenerate = false;
        for (std::size_t i = 0; i < n; ++i) {
            double d = distance(x, anchors[i]);
            if (d < 1e-15 * scale) {
                degenerate = true;
                break;
            }
            for (int a = 0; a < dim; ++a) num[a] += w[i] * anchors[i][a] / d;
            den += w[i] / d;
        }
        if (degenerate) break;
        Point y = x;
        for (int a = 0; a < dim; ++a)
            if (free_axis(a)) y[a] = num[a] / den;
        double step = distance(x, y);
        x = y;
        if (step < 1e-13 * scale) break;
    }
    return x;
}

double weighted_sum(const std::vector<Point>& anchors, const std::vector<double>& w, const Point& x) {
    double s = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) s += w[i] * distance(anchors[i], x);
    return s;
}

Point clamp_to_box(Point p, const BoxDomain& box) {
    for (int a = 0; a < box.dim; ++a) p[a] = std::clamp(p[a], box.lo[a], box.hi[a]);
    return p;
}

// ---------------------------------------------------------------------------

struct Move {
    enum class Kind { relocate, remove, branch, reroute, exit } kind = Kind::relocate;
    double gain = 0;
    int v = -1, a = -1, b = -1;
    Point pos{};
};

class Searcher {
public:
    Searcher(Tree& t, const SolveOptions& opt) : t_(t), opt_(opt) {}

    void run(int max_moves) {
        t_.cleanup();
        for (int it = 0; it < max_moves; ++it) {
            if (it % 25 == 0) rebuild_neighbours();
            Move best;
            double thr = opt_.tolerance * std::max(t_.cost(), 1e-300);
            best.gain = thr;
            bool found = false;
            auto offer = [&](const Move& m) {
                if (m.gain > best.gain) {
                    best = m;
                    found = true;
                }
            };
            int n = static_cast<int>(t_.nodes.size());
            for (int v = 0; v < n; ++v) {
                if (!t_.nodes[v].alive) continue;
                relocate_candidates(v, offer);
                remove_candidate(v, offer);
                branch_candidates(v, offer);
                reroute_candidates(v, offer);
            }
            if (!found) break;
            double before = t_.cost();
            Tree backup = t_;
            apply(best);
            t_.cleanup();
            if (t_.cost() > before - 0.5 * best.gain) {
                t_ = backup;
                break;
            }
        }
    }

private:
    double dim_scale() const { return std::max(1.0, t_.box.diameter()); }

    template <class Offer>
    void relocate_candidates(int v, Offer&& offer) {
        const Node& nd = t_.nodes[v];
        if (nd.supply != 0) return;
        std::vector<Point> anchors;
        std::vector<double> w;
        int dim = t_.box.dim;
        if (!nd.boundary) {
            if (nd.parent < 0) return;
            anchors.push_back(t_.nodes[nd.parent].p);
            w.push_back(t_.cost_of(t_.flow[v]));
            for (int c : t_.children[v]) {
                anchors.push_back(t_.nodes[c].p);
                w.push_back(t_.cost_of(t_.flow[c]));
            }
            Point x = weighted_median(anchors, w, nd.p, dim);
            x = clamp_to_box(x, t_.box);
            double gain = weighted_sum(anchors, w, nd.p) - weighted_sum(anchors, w, x);
            offer(Move{Move::Kind::relocate, gain, v, -1, -1, x});
        } else {
            if (t_.children[v].empty()) return;
            int axis = -1;
            double tiny = 1e-12 * dim_scale();
            for (int a = 0; a < dim && axis < 0; ++a) {
                if (std::abs(nd.p[a] - t_.box.lo[a]) <= tiny || std::abs(nd.p[a] - t_.box.hi[a]) <= tiny) axis = a;
            }
            if (axis < 0) return;
            for (int c : t_.children[v]) {
                anchors.push_back(t_.nodes[c].p);
                w.push_back(t_.cost_of(t_.flow[c]));
            }
            Point x = weighted_median(anchors, w, nd.p, dim, axis);
            x = clamp_to_box(x, t_.box);
            double gain = weighted_sum(anchors, w, nd.p) - weighted_sum(anchors, w, x);
            offer(Move{Move::Kind::relocate, gain, v, -1, -1, x});
        }
    }

    template <class Offer>
    void remove_candidate(int v, Offer&& offer) {
        const Node& nd = t_.nodes[v];
        if (nd.supply != 0 || nd.boundary || nd.parent < 0 || t_.children[v].size() != 1) return;
        int c = t_.children[v].front();
        const Point& pc = t_.nodes[c].p;
        const Point& pp = t_.nodes[nd.parent].p;
        double gain = t_.cost_of(t_.flow[v]) * (distance(pc, nd.p) + distance(nd.p, pp) - distance(pc, pp));
        offer(Move{Move::Kind::remove, gain, v, c, -1, {}});
    }

    template <class Offer>
    void branch_candidates(int h, Offer&& offer) {
        const auto& ch = t_.children[h];
        std::size_t lim = std::min<std::size_t>(ch.size(), 24);
        const Point& ph = t_.nodes[h].p;
        for (std::size_t i = 0; i < lim; ++i) {
            for (std::size_t j = i + 1; j < lim; ++j) {
                int a = ch[i], b = ch[j];
                double wa = t_.cost_of(t_.flow[a]), wb = t_.cost_of(t_.flow[b]);
                double wab = t_.cost_of(t_.flow[a] + t_.flow[b]);
                std::vector<Point> anchors{t_.nodes[a].p, t_.nodes[b].p, ph};
                std::vector<double> w{wa, wb, wab};
                Point start{};
                for (int k = 0; k < kMaxDim; ++k) start[k] = (anchors[0][k] + anchors[1][k] + anchors[2][k]) / 3;
                int hit = -1;
                Point s = clamp_to_box(weighted_median(anchors, w, start, t_.box.dim, -1, &hit), t_.box);
                if (hit == 2) continue;
                double before = wa * distance(anchors[0], ph) + wb * distance(anchors[1], ph);
                double gain = before - weighted_sum(anchors, w, s);
                if (hit == 0) {
                    if (t_.nodes[a].boundary) continue;
                    offer(Move{Move::Kind::reroute, gain, b, a, -1, {}});
                } else if (hit == 1) {
                    if (t_.nodes[b].boundary) continue;
                    offer(Move{Move::Kind::reroute, gain, a, b, -1, {}});
                } else {
                    offer(Move{Move::Kind::branch, gain, h, a, b, s});
                }
            }
        }
    }

    // gain of removing flow F from the chain starting at `from` (the old parent) and the edge v->from
    double reroute_gain(int v, int u, std::vector<double>& contrib, std::vector<int>& chain) {
        const Node& nd = t_.nodes[v];
        long F = t_.flow[v];
        double gain = t_.cost_of(F) * t_.len(v);
        chain.clear();
        contrib.clear();
        ++stamp_;
        for (int w = nd.parent; w >= 0 && t_.nodes[w].parent >= 0; w = t_.nodes[w].parent) {
            double c = (t_.cost_of(t_.flow[w]) - t_.cost_of(t_.flow[w] - F)) * t_.len(w);
            mark_[w] = stamp_;
            pos_[w] = static_cast<int>(chain.size());
            chain.push_back(w);
            contrib.push_back(c);
            gain += c;
        }
        if (u < 0) return gain;
        gain -= t_.cost_of(F) * distance(nd.p, t_.nodes[u].p);
        for (int w = u; w >= 0 && t_.nodes[w].parent >= 0; w = t_.nodes[w].parent) {
            if (mark_[w] == stamp_) {
                for (std::size_t i = pos_[w]; i < contrib.size(); ++i) gain -= contrib[i];
                break;
            }
            gain -= (t_.cost_of(t_.flow[w] + F) - t_.cost_of(t_.flow[w])) * t_.len(w);
        }
        return gain;
    }

    template <class Offer>
    void reroute_candidates(int v, Offer&& offer) {
        const Node& nd = t_.nodes[v];
        if (nd.boundary || nd.parent < 0) return;
        std::vector<double> contrib;
        std::vector<int> chain;
        if (v < static_cast<int>(near_.size())) {
            for (int u : near_[v]) {
                if (!t_.nodes[u].alive || u == nd.parent || u == v) continue;
                if (t_.in_subtree(u, v)) continue;
                double gain = reroute_gain(v, u, contrib, chain);
                offer(Move{Move::Kind::reroute, gain, v, u, -1, {}});
            }
        }
        // straight exit to the nearest boundary point
        double gain = reroute_gain(v, -1, contrib, chain) - t_.cost_of(t_.flow[v]) * dist_to_boundary(clamp_to_box(nd.p, t_.box), t_.box);
        offer(Move{Move::Kind::exit, gain, v, -1, -1, t_.box.nearest_boundary_point(nd.p)});
    }

    void rebuild_neighbours() {
        int n = static_cast<int>(t_.nodes.size());
        mark_.assign(n + 64, 0);
        pos_.assign(n + 64, 0);
        near_.assign(n, {});
        std::vector<int> alive;
        for (int v = 0; v < n; ++v)
            if (t_.nodes[v].alive) alive.push_back(v);
        constexpr std::size_t K = 8;
        std::vector<std::pair<double, int>> cand;
        for (int v : alive) {
            if (t_.nodes[v].boundary) continue;
            cand.clear();
            for (int u : alive) {
                if (u == v) continue;
                cand.push_back({distance(t_.nodes[v].p, t_.nodes[u].p), u});
            }
            std::size_t k = std::min(K, cand.size());
            std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(k), cand.end());
            for (std::size_t i = 0; i < k; ++i) near_[v].push_back(cand[i].second);
        }
    }

    void apply(const Move& m) {
        switch (m.kind) {
            case Move::Kind::relocate: t_.nodes[m.v].p = m.pos; break;
            case Move::Kind::remove:
                t_.nodes[m.a].parent = t_.nodes[m.v].parent;
                t_.nodes[m.v].alive = false;
                break;
            case Move::Kind::branch: {
                int s = t_.add(m.pos, 0, false, m.v);
                t_.nodes[m.a].parent = s;
                t_.nodes[m.b].parent = s;
                grow();
                break;
            }
            case Move::Kind::reroute: t_.nodes[m.v].parent = m.a; break;
            case Move::Kind::exit: {
                int b = t_.add(m.pos, 0, true, -1);
                t_.nodes[m.v].parent = b;
                grow();
                break;
            }
        }
    }

    void grow() {
        std::size_t n = t_.nodes.size();
        if (mark_.size() < n + 1) {
            mark_.resize(2 * n + 64, 0);
            pos_.resize(2 * n + 64, 0);
        }
    }

    Tree& t_;
    const SolveOptions& opt_;
    std::vector<std::vector<int>> near_;
    std::vector<unsigned> mark_;
    std::vector<int> pos_;
    unsigned stamp_ = 0;
};

void perturb(Tree& t, const CounterRng& rng) {
    std::uint64_t ctr = 0;
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        Node& nd = t.nodes[v];
        if (!nd.alive || nd.supply != 0 || nd.boundary || nd.parent < 0) continue;
        double scale = 0.25 * t.len(static_cast<int>(v));
        for (int a = 0; a < t.box.dim; ++a) nd.p[a] += scale * (2 * rng.uniform(ctr++) - 1);
        nd.p = clamp_to_box(nd.p, t.box);
    }
    t.cleanup();
}

}  // namespace

Solution star_baseline(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model) {
    Tree t = tree_from_points(points, box, model);
    std::size_t n = t.nodes.size();
    for (std::size_t v = 0; v < n; ++v) {
        if (t.nodes[v].boundary) continue;
        int b = t.add(box.nearest_boundary_point(t.nodes[v].p), 0, true);
        t.nodes[v].parent = b;
    }
    t.refresh();
    return finish(t, "star");
}

Solution dyadic_construction(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model) {
    Tree t = tree_from_points(points, box, model);
    std::vector<int> interior;
    for (std::size_t v = 0; v < t.nodes.size(); ++v)
        if (!t.nodes[v].boundary) interior.push_back(static_cast<int>(v));
    int dim = box.dim;
    // returns the representative node of the cell
    std::function<int(const BoxDomain&, std::vector<int>)> build = [&](const BoxDomain& cell, std::vector<int> pts) -> int {
        if (pts.size() == 1) return pts.front();
        Point c = cell.center();
        int rep = -1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (distance(t.nodes[pts[i]].p, c) <= kVertexTol) {
                rep = pts[i];
                pts.erase(pts.begin() + static_cast<long>(i));
                break;
            }
        }
        if (rep < 0) rep = t.add(c, 0, false);
        std::map<int, std::vector<int>> kids;
        for (int v : pts) {
            int code = 0;
            for (int a = 0; a < dim; ++a)
                if (t.nodes[v].p[a] >= c[a]) code |= 1 << a;
            kids[code].push_back(v);
        }
        for (auto& [code, sub] : kids) {
            BoxDomain child = cell;
            for (int a = 0; a < dim; ++a) {
                if (code & (1 << a))
                    child.lo[a] = c[a];
                else
                    child.hi[a] = c[a];
            }
            int r = build(child, sub);
            t.nodes[r].parent = rep;
        }
        return rep;
    };
    if (!interior.empty()) {
        int root = build(box, interior);
        int b = t.add(box.nearest_boundary_point(t.nodes[root].p), 0, true);
        t.nodes[root].parent = b;
    }
    t.cleanup();
    return finish(t, "dyadic");
}

Solution local_search(const Solution& start, const CostModel& model, const SolveOptions& options) {
    auto rep = validate(start.graph);
    if (!rep.ok()) throw InputError("local search needs a valid start: " + rep.messages.front());
    if (options.iterations < 0) throw InputError("iterations must be >= 0");
    auto tree = tree_from_graph(start.graph, model);
    if (!tree) return start;
    Tree best = *tree;
    Searcher(best, options).run(options.iterations);
    double best_value = best.cost();
    CounterRng rng(options.seed);
    for (int r = 1; r < options.restarts; ++r) {
        Tree t = best;
        perturb(t, rng.split(static_cast<std::uint64_t>(r)));
        Searcher(t, options).run(options.iterations);
        double v = t.cost();
        if (v < best_value - options.tolerance * best_value) {
            best = t;
            best_value = v;
        }
    }
    Solution out;
    try {
        out = finish(best, start.method + "+ls");
    } catch (const InputError&) {
        return start;
    }
    if (out.value > start.value) return start;
    return out;
}

double oracle_exact(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model,
                    const SolveOptions& options) {
    int n = options.resolution;
    int dim = box.dim;
    if (points.size() > 3) throw ResourceError("lattice oracle handles at most 3 points");
    if (dim > 2) throw ResourceError("lattice oracle handles dimension <= 2");
    if (n < 2 || n > 9) throw ResourceError("lattice oracle resolution must be in 2..9");
    check_points(points, box);
    int count = dim == 1 ? n : n * n;
    auto coord = [&](int id, int a) { return a == 0 ? id % n : id / n; };
    auto position = [&](int id) {
        Point p{};
        for (int a = 0; a < dim; ++a) p[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * coord(id, a) / (n - 1);
        return p;
    };
    std::vector<int> src;
    for (const auto& [p, m] : merge_points(points)) {
        int id = 0, mul = 1;
        for (int a = 0; a < dim; ++a) {
            double x = (p[a] - box.lo[a]) / (box.hi[a] - box.lo[a]) * (n - 1);
            long i = std::lround(x);
            if (std::abs(x - i) > 1e-9) throw InputError("oracle points must sit on lattice nodes");
            id += static_cast<int>(i) * mul;
            mul *= n;
        }
        if (box.on_boundary(p)) continue;
        for (long u = 0; u < m; ++u) src.push_back(id);
    }
    int s = static_cast<int>(src.size());
    if (s == 0) return 0;
    std::vector<std::vector<std::pair<int, double>>> adj(count);
    for (int u = 0; u < count; ++u) {
        for (int v = 0; v < count; ++v) {
            if (u == v) continue;
            bool near = true;
            for (int a = 0; a < dim; ++a) near = near && std::abs(coord(u, a) - coord(v, a)) <= 1;
            if (near) adj[u].push_back({v, distance(position(u), position(v))});
        }
    }
    auto dijkstra = [&](std::vector<double> d, double w) {
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        for (int v = 0; v < count; ++v)
            if (d[v] < kInf) pq.push({d[v], v});
        while (!pq.empty()) {
            auto [dv, v] = pq.top();
            pq.pop();
            if (dv > d[v]) continue;
            for (auto [u, len] : adj[v]) {
                double nd = dv + w * len;
                if (nd < d[u]) {
                    d[u] = nd;
                    pq.push({nd, u});
                }
            }
        }
        return d;
    };
    std::vector<double> to_boundary(count, kInf);
    for (int v = 0; v < count; ++v)
        if (box.on_boundary(position(v))) to_boundary[v] = 0;
    to_boundary = dijkstra(to_boundary, 1.0);

    int full = (1 << s) - 1;
    // merged[S][v]: cheapest way to bring every source of S to v as one stream
    std::vector<std::vector<double>> merged(full + 1, std::vector<double>(count, kInf));
    std::vector<double> best(full + 1, kInf);
    for (int S = 1; S <= full; ++S) {
        int size = __builtin_popcount(static_cast<unsigned>(S));
        auto& T = merged[S];
        if (size == 1) {
            int i = __builtin_ctz(static_cast<unsigned>(S));
            T[src[i]] = 0;
        } else {
            for (int S1 = (S - 1) & S; S1 > 0; S1 = (S1 - 1) & S) {
                if (!(S1 & (S & -S))) continue;
                for (int v = 0; v < count; ++v) T[v] = std::min(T[v], merged[S1][v] + merged[S ^ S1][v]);
            }
        }
        T = dijkstra(T, model.cost(size));
        for (int v = 0; v < count; ++v) best[S] = std::min(best[S], T[v] + model.cost(size) * to_boundary[v]);
        for (int S1 = (S - 1) & S; S1 > 0; S1 = (S1 - 1) & S) best[S] = std::min(best[S], best[S1] + best[S ^ S1]);
    }
    return best[full];
}

Solution solve_brbd(const std::vector<Point>& points, const BoxDomain& box, const CostModel& model,
                    const SolveOptions& options) {
    Solution star = star_baseline(points, box, model);
    Solution dy = dyadic_construction(points, box, model);
    std::vector<Solution> cands{star, dy, local_search(star, model, options), local_search(dy, model, options)};
    std::size_t bi = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
        if (cands[i].value < cands[bi].value) bi = i;
    Solution out = cands[bi];
    out.lower_bound = flux_lower_bound(points, box, model);
    if (*out.lower_bound > out.value + kCostTol * std::max(1.0, out.value))
        throw NumericalError("lower bound exceeds construction value");
    return out;
}

namespace {

// Hungarian method for a square cost matrix; returns the column of each row.
std::vector<int> assignment(const std::vector<std::vector<double>>& c) {
    int n = static_cast<int>(c.size());
    std::vector<double> u(n + 1), v(n + 1);
    std::vector<int> p(n + 1), way(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col(n);
    for (int j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
    return col;
}

}  // namespace

Solution solve_charged(const ChargedConfig& config, const CostModel& model, const SolveOptions& options) {
    (void)options;
    config.check();
    if (!config.domain && config.positive_total() != config.negative_total())
        throw InputError("free-space configuration must be balanced");
    std::vector<int> pos_unit, neg_unit;
    for (std::size_t i = 0; i < config.positives.size(); ++i) {
        long m = config.positive_mag.empty() ? 1 : config.positive_mag[i];
        for (long u = 0; u < m; ++u) pos_unit.push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < config.negatives.size(); ++i) {
        long m = config.negative_mag.empty() ? 1 : config.negative_mag[i];
        for (long u = 0; u < m; ++u) neg_unit.push_back(static_cast<int>(i));
    }
    int P = static_cast<int>(pos_unit.size()), Q = static_cast<int>(neg_unit.size());
    bool box = config.domain.has_value();
    int n = box ? P + Q : P;
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    // rows: positives then boundary slots; columns: negatives then boundary slots
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            bool ri = i < P, cj = j < Q;
            if (ri && cj)
                c[i][j] = distance(config.positives[pos_unit[i]], config.negatives[neg_unit[j]]);
            else if (ri)
                c[i][j] = dist_to_boundary(config.positives[pos_unit[i]], *config.domain);
            else if (cj)
                c[i][j] = dist_to_boundary(config.negatives[neg_unit[j]], *config.domain);
        }
    }
    auto col = assignment(c);
    TransportGraph g;
    g.dim = config.dim;
    g.domain = config.domain;
    std::map<Key, int> ids;
    auto vertex = [&](const Point& p) {
        auto key = point_key(p);
        auto it = ids.find(key);
        if (it == ids.end()) it = ids.emplace(key, g.add_vertex(p)).first;
        return it->second;
    };
    for (std::size_t i = 0; i < config.positives.size(); ++i)
        g.add_source(vertex(config.positives[i]), config.positive_mag.empty() ? 1 : config.positive_mag[i]);
    for (std::size_t i = 0; i < config.negatives.size(); ++i)
        g.add_source(vertex(config.negatives[i]), -(config.negative_mag.empty() ? 1 : config.negative_mag[i]));
    std::map<std::pair<int, int>, long> m;
    for (int i = 0; i < n; ++i) {
        int j = col[i];
        bool ri = i < P, cj = j < Q;
        if (ri && cj) {
            m[{vertex(config.positives[pos_unit[i]]), vertex(config.negatives[neg_unit[j]])}] += 1;
        } else if (ri) {
            const Point& p = config.positives[pos_unit[i]];
            if (!config.domain->on_boundary(p)) m[{vertex(p), vertex(config.domain->nearest_boundary_point(p))}] += 1;
        } else if (cj) {
            const Point& q = config.negatives[neg_unit[j]];
            if (!config.domain->on_boundary(q)) m[{vertex(config.domain->nearest_boundary_point(q)), vertex(q)}] += 1;
        }
    }
    for (const auto& [k, d] : m)
        if (k.first != k.second) g.edges.push_back({k.first, k.second, d});
    Solution s;
    s.graph = g;
    s.value = w_alpha(g, model);
    s.method = "matching";
    if (box) s.lower_bound = 0.0;
    return s;
}

double protected_lower_bound(const ChargedConfig& config, const std::vector<BoxDomain>& boxes, const CostModel& model) {
    std::vector<double> vals;
    for (const auto& b : boxes) {
        std::vector<Point> inside;
        for (std::size_t i = 0; i < config.positives.size(); ++i) {
            if (!b.contains(config.positives[i], 0.0)) continue;
            long m = config.positive_mag.empty() ? 1 : config.positive_mag[i];
            for (long u = 0; u < m; ++u) inside.push_back(config.positives[i]);
        }
        vals.push_back(flux_lower_bound(inside, b, model));
    }
    return charged_lower_bound(config, boxes, vals);
}

nlohmann::json solution_to_json(const Solution& s, const CostModel& model) {
    nlohmann::json j;
    j["method"] = s.method;
    j["model"] = model.spec();
    j["value"] = s.value;
    j["lower_bound"] = s.lower_bound ? nlohmann::json(*s.lower_bound) : nlohmann::json(nullptr);
    j["graph"] = graph_to_json(s.graph);
    round_floats(j);
    return j;
}

}  // namespace hopflab
