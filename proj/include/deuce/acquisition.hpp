#ifndef DEUCE_ACQUISITION_HPP
#define DEUCE_ACQUISITION_HPP

#include "deuce/common.hpp"
#include "deuce/density_cluster.hpp"
#include "deuce/dng.hpp"

#include <functional>
#include <map>
#include <numeric>
#include <queue>

namespace deuce {

struct PropagatedUncertainty {
    std::vector<double> values;
    std::vector<char> propagated_mask;
};

/// One message-passing step: clustered documents add w * p_j * u_j from every
/// graph-adjacent member of their own cluster. Outliers keep u_i.
inline PropagatedUncertainty propagate(std::span<const double> u, const ClusterAssignment& clusters,
                                       const DualNeighborGraph& g) {
    if (u.size() != g.n_nodes || clusters.label.size() != g.n_nodes) {
        throw Error("propagate: inputs cover different node counts");
    }
    PropagatedUncertainty out;
    out.values.assign(u.begin(), u.end());
    out.propagated_mask.assign(g.n_nodes, 0);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        const auto ci = clusters.label[i];
        if (ci == kOutlier) continue;
        out.propagated_mask[i] = 1;
        double acc = u[i];
        for (const auto& e : g.adjacency[i]) {
            if (clusters.label[e.target] == ci) {
                acc += e.weight * clusters.membership[e.target] * u[e.target];
            }
        }
        out.values[i] = acc;
    }
    return out;
}

/**
 * Greedy max-min traversal on graph geodesics with edge length 1 / w_dual.
 *
 * The distance of every node to the selected set is kept up to date with a
 * pruned Dijkstra from each new pick. Unreachable nodes (+inf) win over any
 * finite distance; ties go to the lower index.
 *
 * When `radii` is given it receives each pick's distance to the previously
 * selected set (+inf for the start).
 */
inline std::vector<Index> fps(const DualNeighborGraph& g, Index start, std::size_t b,
                              std::vector<double>* radii = nullptr) {
    const std::size_t n = g.n_nodes;
    if (b < 1) throw Error("fps: budget must be >= 1");
    if (b > n) throw Error("fps: budget " + std::to_string(b) + " exceeds " + std::to_string(n) + " nodes");
    if (start >= n) throw Error("fps: start node out of range");
    std::vector<double> dist(n, kInf);
    std::vector<char> chosen(n, 0);
    std::vector<Index> order;
    order.reserve(b);
    if (radii) {
        radii->clear();
        radii->push_back(kInf);
    }

    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    auto relax_from = [&](Index s) {
        dist[s] = 0.0;
        heap.emplace(0.0, s);
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d > dist[v]) continue;
            for (const auto& e : g.adjacency[v]) {
                const double nd = d + 1.0 / e.weight;
                if (nd < dist[e.target]) {
                    dist[e.target] = nd;
                    heap.emplace(nd, e.target);
                }
            }
        }
    };

    Index next = start;
    while (true) {
        chosen[next] = 1;
        order.push_back(next);
        if (order.size() == b) break;
        relax_from(next);
        Index best = 0;
        double best_d = -1.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (!chosen[v] && dist[v] > best_d) {
                best_d = dist[v];
                best = static_cast<Index>(v);
            }
        }
        if (radii) radii->push_back(best_d);
        next = best;
    }
    return order;
}

struct FpsCandidate {
    Index start_index = 0;
    std::vector<Index> selected;
    double score = 0.0;
};

struct AcquisitionResult {
    FpsCandidate best;
    std::vector<FpsCandidate> candidates;  ///< in start order (highest degree first)
};

/// The `count` nodes of largest weighted degree; ties by lower index.
inline std::vector<Index> top_degree_nodes(const DualNeighborGraph& g, std::size_t count) {
    std::vector<double> deg(g.n_nodes);
    for (std::size_t i = 0; i < g.n_nodes; ++i) deg[i] = g.weighted_degree(static_cast<Index>(i));
    std::vector<Index> idx(g.n_nodes);
    std::iota(idx.begin(), idx.end(), 0u);
    count = std::min(count, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](Index a, Index b) { return deg[a] != deg[b] ? deg[a] > deg[b] : a < b; });
    idx.resize(count);
    return idx;
}

inline double candidate_score(std::span<const Index> members, std::span<const double> values) {
    double s = 0.0;
    for (Index m : members) s += values[m];
    return s;
}

/// FPS from each top-degree start; keeps the candidate with the largest
/// summed propagated uncertainty (ties by lower start index).
inline AcquisitionResult select_candidates(const DualNeighborGraph& g, const PropagatedUncertainty& u_tilde,
                                           std::size_t b, std::size_t n_starts, unsigned threads = 0) {
    if (b < 1 || b > g.n_nodes) {
        throw Error("budget b = " + std::to_string(b) + " must be in [1, " + std::to_string(g.n_nodes) + "]");
    }
    if (n_starts < 1) throw Error("n_starts must be >= 1");
    if (u_tilde.values.size() != g.n_nodes) throw Error("uncertainty vector does not match graph size");
    const auto starts = top_degree_nodes(g, n_starts);
    AcquisitionResult out;
    out.candidates.resize(starts.size());
    parallel_for(
        starts.size(),
        [&](std::size_t s) {
            auto& c = out.candidates[s];
            c.start_index = starts[s];
            c.selected = fps(g, starts[s], b);
            c.score = candidate_score(c.selected, u_tilde.values);
        },
        threads);
    std::size_t best = 0;
    for (std::size_t s = 1; s < out.candidates.size(); ++s) {
        const auto& c = out.candidates[s];
        const auto& cur = out.candidates[best];
        if (c.score > cur.score || (c.score == cur.score && c.start_index < cur.start_index)) best = s;
    }
    out.best = out.candidates[best];
    return out;
}

} // namespace deuce

#endif // DEUCE_ACQUISITION_HPP
