// Test-only reference implementations. Each one follows the defining
// formula directly (dense matrices, full sorts, recursion) and shares no
// code path with the library beyond the input types.
#ifndef DEUCE_TESTS_ORACLES_HPP
#define DEUCE_TESTS_ORACLES_HPP

#include "deuce/deuce.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using deuce::Index;
using deuce::kInf;

/// y_ij = |{(m,n): s_mn <= s_ij}| / NC by double loop.
inline deuce::MatrixD edf(const deuce::MatrixD& s) {
    deuce::MatrixD out(s.rows(), s.cols());
    const auto& v = s.data();
    for (std::size_t a = 0; a < v.size(); ++a) {
        std::size_t count = 0;
        for (std::size_t b = 0; b < v.size(); ++b) count += v[b] <= v[a] ? 1 : 0;
        out.data()[a] = static_cast<double>(count) / static_cast<double>(v.size());
    }
    return out;
}

/// p(E) by the literal product formula.
inline double ova_probability(const std::vector<double>& y) {
    double best = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        double p = y[j];
        for (std::size_t l = 0; l < y.size(); ++l) {
            if (l != j) p *= 1.0 - y[l];
        }
        best = std::max(best, p);
    }
    return best;
}

/// Neighbor lists from a full sort of all pairs by (distance, index).
template <typename Dist>
std::vector<std::vector<Index>> knn(std::size_t n, std::size_t k, Dist dist) {
    std::vector<std::vector<Index>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, Index>> all;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) all.emplace_back(dist(i, j), static_cast<Index>(j));
        }
        std::sort(all.begin(), all.end());
        for (std::size_t r = 0; r < k; ++r) out[i].push_back(all[r].second);
    }
    return out;
}

// ---------------------------------------------------------------------------
// HDBSCAN on a graph, dense and top-down.

struct DenseGraph {
    std::size_t n;
    std::vector<std::vector<double>> len;  // +inf where no edge
};

inline DenseGraph dense_lengths(const deuce::DualNeighborGraph& g) {
    DenseGraph d{g.n_nodes, std::vector<std::vector<double>>(g.n_nodes, std::vector<double>(g.n_nodes, kInf))};
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (const auto& e : g.adjacency[i]) d.len[i][e.target] = 1.0 / e.weight;
    }
    return d;
}

inline DenseGraph mutual_reachability(const deuce::DualNeighborGraph& g, std::size_t k) {
    auto d = dense_lengths(g);
    std::vector<double> core(d.n, kInf);
    for (std::size_t i = 0; i < d.n; ++i) {
        std::vector<double> row;
        for (double x : d.len[i]) {
            if (std::isfinite(x)) row.push_back(x);
        }
        std::sort(row.begin(), row.end());
        if (!row.empty()) core[i] = row[std::min(k, row.size()) - 1];
    }
    DenseGraph m = d;
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t j = 0; j < d.n; ++j) {
            if (std::isfinite(d.len[i][j])) m.len[i][j] = std::max({core[i], core[j], d.len[i][j]});
        }
    }
    return m;
}

/// Sorted MST edge lengths per component via Prim.
inline std::vector<double> prim_forest_lengths(const DenseGraph& m) {
    std::vector<double> out;
    std::vector<char> done(m.n, 0);
    for (std::size_t s = 0; s < m.n; ++s) {
        if (done[s]) continue;
        std::vector<double> best(m.n, kInf);
        best[s] = 0.0;
        while (true) {
            std::size_t u = m.n;
            for (std::size_t v = 0; v < m.n; ++v) {
                if (!done[v] && std::isfinite(best[v]) && (u == m.n || best[v] < best[u])) u = v;
            }
            if (u == m.n) break;
            done[u] = 1;
            if (u != s) out.push_back(best[u]);
            for (std::size_t v = 0; v < m.n; ++v) {
                if (!done[v] && m.len[u][v] < best[v]) best[v] = m.len[u][v];
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Components of `pts` using edges with length < limit (or <= when inclusive).
inline std::vector<std::vector<Index>> components(const DenseGraph& m, const std::vector<Index>& pts, double limit,
                                                  bool inclusive) {
    std::set<Index> left(pts.begin(), pts.end());
    std::vector<std::vector<Index>> comps;
    while (!left.empty()) {
        std::vector<Index> comp{*left.begin()};
        left.erase(left.begin());
        for (std::size_t q = 0; q < comp.size(); ++q) {
            for (auto it = left.begin(); it != left.end();) {
                const double w = m.len[comp[q]][*it];
                if (inclusive ? w <= limit : w < limit) {
                    comp.push_back(*it);
                    it = left.erase(it);
                } else {
                    ++it;
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

struct Cluster {
    int parent = -1;
    double birth = 0.0;
    std::size_t size = 0;
    std::vector<int> children;
    std::vector<std::pair<Index, double>> departures;
};

inline void grow(const DenseGraph& m, std::size_t min_size, std::vector<Cluster>& cl, int cid, std::vector<Index> pts) {
    while (true) {
        // Smallest level at which pts is connected.
        std::vector<double> levels;
        for (Index a : pts)
            for (Index b : pts)
                if (a < b && std::isfinite(m.len[a][b])) levels.push_back(m.len[a][b]);
        std::sort(levels.begin(), levels.end());
        double t = levels.back();
        for (double l : levels) {
            if (components(m, pts, l, true).size() == 1) {
                t = l;
                break;
            }
        }
        const double lambda = 1.0 / t;
        auto parts = components(m, pts, t, false);
        std::vector<std::vector<Index>> big;
        for (auto& p : parts) {
            if (p.size() >= min_size) big.push_back(p);
        }
        for (auto& p : parts) {
            if (p.size() < min_size || big.empty()) {
                for (Index x : p) cl[cid].departures.emplace_back(x, lambda);
            }
        }
        if (big.size() == 1) {
            pts = big.front();
            continue;
        }
        for (auto& p : big) {
            Cluster c;
            c.parent = cid;
            c.birth = lambda;
            c.size = p.size();
            cl.push_back(c);
            const int id = static_cast<int>(cl.size()) - 1;
            cl[cid].children.push_back(id);
            grow(m, min_size, cl, id, p);
        }
        return;
    }
}

inline double stability(const std::vector<Cluster>& cl, int c) {
    double s = 0.0;
    for (auto [p, l] : cl[c].departures) s += l - cl[c].birth;
    for (int ch : cl[c].children) s += static_cast<double>(cl[ch].size) * (cl[ch].birth - cl[c].birth);
    return s;
}

inline double choose(const std::vector<Cluster>& cl, int c, std::vector<char>& sel) {
    const double own = stability(cl, c);
    if (cl[c].children.empty()) {
        sel[c] = 1;
        return own;
    }
    std::vector<char> trial = sel;
    double sum = 0.0;
    for (int ch : cl[c].children) sum += choose(cl, ch, trial);
    if (sum > own) {
        sel = trial;
        return sum;
    }
    sel[c] = 1;
    return own;
}

struct Flat {
    std::vector<int> label;
    std::vector<double> membership;
};

inline Flat hdbscan(const deuce::DualNeighborGraph& g, std::size_t min_size) {
    const auto m = mutual_reachability(g, min_size);
    std::vector<Index> all(m.n);
    for (std::size_t i = 0; i < m.n; ++i) all[i] = static_cast<Index>(i);
    std::vector<Cluster> cl;
    std::vector<int> roots;
    for (auto& comp : components(m, all, kInf, false)) {
        if (comp.size() < min_size) continue;
        Cluster c;
        c.size = comp.size();
        cl.push_back(c);
        roots.push_back(static_cast<int>(cl.size()) - 1);
        grow(m, min_size, cl, roots.back(), comp);
    }
    std::vector<char> sel(cl.size(), 0);
    for (int r : roots) choose(cl, r, sel);

    std::vector<int> owner(m.n, -1);
    std::vector<double> lam(m.n, 0.0);
    for (int c = 0; c < static_cast<int>(cl.size()); ++c) {
        for (auto [p, l] : cl[c].departures) {
            int s = c;
            while (s != -1 && !sel[s]) s = cl[s].parent;
            if (s == -1) continue;
            if (cl[s].parent == -1) {
                double top = 0.0;
                for (auto [q, lq] : cl[s].departures) top = std::max(top, lq);
                for (int ch : cl[s].children) top = std::max(top, cl[ch].birth);
                if (l < top) continue;
            }
            owner[p] = s;
            lam[p] = l;
        }
    }
    Flat f{std::vector<int>(m.n, -1), std::vector<double>(m.n, 0.0)};
    std::map<int, double> lmax;
    for (std::size_t i = 0; i < m.n; ++i) {
        if (owner[i] != -1) lmax[owner[i]] = std::max(lmax[owner[i]], lam[i]);
    }
    std::map<int, int> ids;
    for (std::size_t i = 0; i < m.n; ++i) {
        if (owner[i] == -1) continue;
        auto it = ids.find(owner[i]);
        if (it == ids.end()) it = ids.emplace(owner[i], static_cast<int>(ids.size())).first;
        f.label[i] = it->second;
        f.membership[i] = std::min(1.0, lam[i] / lmax[owner[i]]);
    }
    return f;
}

// ---------------------------------------------------------------------------
// FPS by all-pairs shortest paths and literal re-evaluation.

inline std::vector<std::vector<double>> floyd_warshall(const deuce::DualNeighborGraph& g) {
    auto d = dense_lengths(g).len;
    for (std::size_t i = 0; i < g.n_nodes; ++i) d[i][i] = 0.0;
    for (std::size_t k = 0; k < g.n_nodes; ++k)
        for (std::size_t i = 0; i < g.n_nodes; ++i)
            for (std::size_t j = 0; j < g.n_nodes; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

inline std::vector<Index> fps(const std::vector<std::vector<double>>& d, Index start, std::size_t b,
                              std::vector<double>* radii = nullptr) {
    std::vector<Index> sel{start};
    if (radii) *radii = {kInf};
    while (sel.size() < b) {
        Index best = 0;
        double best_d = -1.0;
        for (std::size_t v = 0; v < d.size(); ++v) {
            if (std::find(sel.begin(), sel.end(), v) != sel.end()) continue;
            double md = kInf;
            for (Index s : sel) md = std::min(md, d[s][v]);
            if (md > best_d) {
                best_d = md;
                best = static_cast<Index>(v);
            }
        }
        sel.push_back(best);
        if (radii) radii->push_back(best_d);
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Random instances

/// Graph from an explicit undirected weighted edge list; every edge typed as dual.
inline deuce::DualNeighborGraph graph_from_edges(std::size_t n, const std::vector<std::tuple<Index, Index, double>>& edges) {
    deuce::DualNeighborGraph g;
    g.n_nodes = n;
    g.adjacency.resize(n);
    for (auto [a, b, w] : edges) {
        g.adjacency[a].push_back({b, w, deuce::EdgeType::Dual});
        g.adjacency[b].push_back({a, w, deuce::EdgeType::Dual});
    }
    for (auto& adj : g.adjacency) {
        std::sort(adj.begin(), adj.end(), [](const auto& x, const auto& y) { return x.target < y.target; });
    }
    return g;
}

/// Planted groups with strong internal edges plus weak random cross edges.
inline deuce::DualNeighborGraph random_clustered_graph(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> groups_d(1, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int groups = groups_d(rng);
    std::vector<int> grp(n);
    for (auto& x : grp) x = std::uniform_int_distribution<int>(0, groups - 1)(rng);
    std::vector<std::tuple<Index, Index, double>> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (grp[i] == grp[j] && u(rng) < 0.6) {
                edges.emplace_back(i, j, 0.5 + 1.5 * u(rng));
            } else if (u(rng) < 0.08) {
                edges.emplace_back(i, j, 0.01 + 0.3 * u(rng));
            }
        }
    }
    return graph_from_edges(n, edges);
}

/// Random spanning tree plus extra edges; always connected.
inline deuce::DualNeighborGraph random_connected_graph(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::set<std::pair<Index, Index>> seen;
    std::vector<std::tuple<Index, Index, double>> edges;
    for (Index i = 1; i < n; ++i) {
        Index j = std::uniform_int_distribution<Index>(0, i - 1)(rng);
        seen.emplace(j, i);
        edges.emplace_back(j, i, 0.1 + 1.9 * u(rng));
    }
    const std::size_t extra = n;
    for (std::size_t e = 0; e < extra; ++e) {
        Index a = std::uniform_int_distribution<Index>(0, n - 1)(rng);
        Index b = std::uniform_int_distribution<Index>(0, n - 1)(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!seen.emplace(a, b).second) continue;
        edges.emplace_back(a, b, 0.1 + 1.9 * u(rng));
    }
    return graph_from_edges(n, edges);
}

inline deuce::MatrixF random_unit_rows(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    deuce::MatrixF m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double n2 = 0.0;
        std::vector<double> v(d);
        for (auto& x : v) {
            x = g(rng);
            n2 += x * x;
        }
        for (std::size_t c = 0; c < d; ++c) m(i, c) = static_cast<float>(v[c] / std::sqrt(n2));
    }
    return m;
}

} // namespace oracle

#endif // DEUCE_TESTS_ORACLES_HPP
