#ifndef DEUCE_KNN_GRAPH_HPP
#define DEUCE_KNN_GRAPH_HPP

#include "deuce/common.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <tuple>

/**
 * @file knn_graph.hpp
 *
 * @brief Exact kNN graphs, per-node smooth normalization and fuzzy-union
 * symmetrization.
 */

namespace deuce {

enum class MetricSpaceKind { Textual, Label };

enum class GraphKind { DirectedKnn, NormalizedDirected, Symmetric };

struct WeightedEdge {
    Index target;
    double weight;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/**
 * Adjacency-list graph over `n_nodes` nodes.
 *
 * Directed kinds keep each node's out-edges ordered by distance (nearest
 * first). The symmetric kind stores every unordered pair in both endpoint
 * lists with one shared weight, each list ordered by neighbor index.
 */
struct SparseWeightedGraph {
    std::size_t n_nodes = 0;
    GraphKind kind = GraphKind::DirectedKnn;
    std::vector<std::vector<WeightedEdge>> adjacency;
    std::vector<double> rho;
    std::vector<double> sigma;
    /// Nodes whose normalization fell back to the lower bracket.
    std::vector<char> boundary;

    std::size_t edge_count() const {
        std::size_t total = 0;
        for (const auto& a : adjacency) total += a.size();
        return kind == GraphKind::Symmetric ? total / 2 : total;
    }
};

/// Cosine distance scaled to [0, 1]: arccos(<a,b>) / pi, argument clamped.
template <typename T>
double angular_distance(std::span<const T> a, std::span<const T> b) {
    // 2 atan2(|a - b|, |a + b|) on unit rows; stable near 0 and pi.
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    double diff = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]) / na;
        const double y = static_cast<double>(b[i]) / nb;
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) / std::numbers::pi;
}

template <typename T>
double l1_distance(std::span<const T> a, std::span<const T> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    }
    return acc;
}

/**
 * Exact kNN by brute force under an arbitrary distance functor
 * `dist(i, j) -> double`. Self is excluded and ties go to the lower index.
 */
template <typename Distance>
SparseWeightedGraph build_knn_with(std::size_t n, std::size_t k, Distance&& dist, unsigned threads = 0) {
    if (k < 1) throw Error("kNN requires k >= 1");
    if (n < 2) throw Error("kNN requires at least 2 points");
    if (k >= n) {
        throw Error("k = " + std::to_string(k) + " must be smaller than the number of points (" + std::to_string(n) +
                    ")");
    }
    SparseWeightedGraph g;
    g.n_nodes = n;
    g.kind = GraphKind::DirectedKnn;
    g.adjacency.resize(n);
    g.rho.assign(n, 0.0);
    g.sigma.assign(n, 0.0);
    g.boundary.assign(n, 0);
    parallel_for(
        n,
        [&](std::size_t i) {
            std::vector<std::pair<double, Index>> cand;
            cand.reserve(n - 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) cand.emplace_back(dist(i, j), static_cast<Index>(j));
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
            auto& out = g.adjacency[i];
            out.reserve(k);
            for (std::size_t r = 0; r < k; ++r) {
                out.push_back({cand[r].second, cand[r].first});
            }
            g.rho[i] = out.front().weight;
        },
        threads);
    return g;
}

/// Textual space uses rows of `points` under the angular distance; the label
/// space uses calibrated score rows under l1.
template <typename T>
SparseWeightedGraph build_knn(const Matrix<T>& points, MetricSpaceKind metric, std::size_t k, unsigned threads = 0) {
    if (k < 2) throw Error("kNN requires k >= 2");
    if (metric == MetricSpaceKind::Textual) {
        return build_knn_with(
            points.rows(), k, [&](std::size_t i, std::size_t j) { return angular_distance(points.row(i), points.row(j)); },
            threads);
    }
    return build_knn_with(
        points.rows(), k, [&](std::size_t i, std::size_t j) { return l1_distance(points.row(i), points.row(j)); },
        threads);
}

struct SigmaSolution {
    double sigma;
    bool boundary;
};

inline constexpr double kSigmaLowerBracket = 1e-12;
inline constexpr double kNormalizationTolerance = 1e-5;

/**
 * Solves sum_j exp(-(d_j - rho) / sigma) = log2(k) for sigma by geometric
 * bisection on [1e-12, 1e4 * max gap].
 *
 * When the number of neighbors at distance rho already reaches log2(k) the
 * left side never drops to the target; sigma is then the lower bracket and
 * the node is flagged as a boundary case.
 */
inline SigmaSolution solve_sigma(std::span<const double> gaps) {
    const std::size_t k = gaps.size();
    const double target = std::log2(static_cast<double>(k));
    std::size_t zero_gaps = 0;
    double max_gap = 0.0;
    for (double g : gaps) {
        if (g <= 0.0) ++zero_gaps;
        max_gap = std::max(max_gap, g);
    }
    if (static_cast<double>(zero_gaps) >= target || max_gap <= 0.0) {
        return {kSigmaLowerBracket, true};
    }
    auto lhs = [&](double sigma) {
        double s = 0.0;
        for (double g : gaps) s += std::exp(-g / sigma);
        return s;
    };
    double lo = kSigmaLowerBracket;
    double hi = 1e4 * max_gap;
    double mid = hi;
    for (int it = 0; it < 100; ++it) {
        mid = std::sqrt(lo * hi);
        if (!(mid > lo && mid < hi)) {
            break;
        }
        const double value = lhs(mid);
        if (value == target) {
            break;
        }
        (value > target ? hi : lo) = mid;
    }
    return {mid, false};
}

/// Replaces raw distances by exp(-(d - rho_i) / sigma_i).
inline SparseWeightedGraph normalize_graph(const SparseWeightedGraph& g) {
    if (g.kind != GraphKind::DirectedKnn) throw Error("normalize_graph expects a directed kNN graph");
    SparseWeightedGraph out = g;
    out.kind = GraphKind::NormalizedDirected;
    out.boundary.assign(g.n_nodes, 0);
    std::vector<double> gaps;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        auto& edges = out.adjacency[i];
        if (edges.empty()) continue;
        const double rho = g.rho[i];
        gaps.clear();
        for (const auto& e : edges) gaps.push_back(std::max(0.0, e.weight - rho));
        const auto sol = solve_sigma(gaps);
        out.sigma[i] = sol.sigma;
        out.boundary[i] = sol.boundary ? 1 : 0;
        for (std::size_t r = 0; r < edges.size(); ++r) {
            edges[r].weight = sol.boundary ? 1.0 : std::exp(-gaps[r] / sol.sigma);
        }
    }
    return out;
}

/// Fuzzy union a + b - a*b over every unordered pair with at least one directed edge.
inline SparseWeightedGraph symmetrize(const SparseWeightedGraph& g) {
    if (g.kind != GraphKind::NormalizedDirected) throw Error("symmetrize expects a normalized directed graph");
    struct Half {
        Index lo, hi;
        double weight;
        bool forward;  // lo -> hi
    };
    std::vector<Half> halves;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (const auto& e : g.adjacency[i]) {
            const auto src = static_cast<Index>(i);
            if (e.target == src) continue;
            halves.push_back({std::min(src, e.target), std::max(src, e.target), e.weight, src < e.target});
        }
    }
    std::sort(halves.begin(), halves.end(), [](const Half& a, const Half& b) {
        return std::tie(a.lo, a.hi, a.forward) < std::tie(b.lo, b.hi, b.forward);
    });
    SparseWeightedGraph out;
    out.n_nodes = g.n_nodes;
    out.kind = GraphKind::Symmetric;
    out.adjacency.resize(g.n_nodes);
    out.rho = g.rho;
    out.sigma = g.sigma;
    out.boundary = g.boundary;
    for (std::size_t p = 0; p < halves.size();) {
        double a = 0.0, b = 0.0;
        std::size_t q = p;
        for (; q < halves.size() && halves[q].lo == halves[p].lo && halves[q].hi == halves[p].hi; ++q) {
            (halves[q].forward ? a : b) = halves[q].weight;
        }
        const double w = a + b - a * b;
        out.adjacency[halves[p].lo].push_back({halves[p].hi, w});
        out.adjacency[halves[p].hi].push_back({halves[p].lo, w});
        p = q;
    }
    for (auto& adj : out.adjacency) {
        std::sort(adj.begin(), adj.end(), [](const WeightedEdge& x, const WeightedEdge& y) { return x.target < y.target; });
    }
    return out;
}

/// Looks up w(i, j) in a graph whose lists are ordered by target; 0 if absent.
inline double edge_weight(const SparseWeightedGraph& g, Index i, Index j) {
    const auto& adj = g.adjacency[i];
    auto it = std::lower_bound(adj.begin(), adj.end(), j, [](const WeightedEdge& e, Index t) { return e.target < t; });
    return (it != adj.end() && it->target == j) ? it->weight : 0.0;
}

/// `src dst weight` per line. Symmetric graphs list each pair once (src < dst).
inline void dump_edges(const SparseWeightedGraph& g, std::ostream& out) {
    out.precision(17);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (const auto& e : g.adjacency[i]) {
            if (g.kind == GraphKind::Symmetric && e.target < i) continue;
            out << i << ' ' << e.target << ' ' << e.weight << '\n';
        }
    }
}

} // namespace deuce

#endif // DEUCE_KNN_GRAPH_HPP
