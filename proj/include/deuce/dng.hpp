#ifndef DEUCE_DNG_HPP
#define DEUCE_DNG_HPP

#include "deuce/common.hpp"
#include "deuce/knn_graph.hpp"

#include <ostream>
#include <string_view>

namespace deuce {

enum class EdgeType : std::uint8_t { SingleTextual, SingleLabel, Dual };

inline std::string_view to_string(EdgeType t) {
    switch (t) {
    case EdgeType::SingleTextual: return "textual";
    case EdgeType::SingleLabel: return "label";
    case EdgeType::Dual: return "dual";
    }
    return "?";
}

struct DualEdge {
    Index target;
    double weight;
    EdgeType type;

    friend bool operator==(const DualEdge&, const DualEdge&) = default;
};

/// Undirected merged graph; each pair appears in both endpoint lists,
/// ordered by neighbor index.
struct DualNeighborGraph {
    std::size_t n_nodes = 0;
    double gamma = 1.0;
    std::vector<std::vector<DualEdge>> adjacency;

    std::size_t edge_count() const {
        std::size_t total = 0;
        for (const auto& a : adjacency) total += a.size();
        return total / 2;
    }

    double weighted_degree(Index i) const {
        double d = 0.0;
        for (const auto& e : adjacency[i]) d += e.weight;
        return d;
    }
};

/**
 * Union of two symmetric graphs. Pairs present in both become dual edges
 * weighted w_text * w_label + gamma; the rest keep their single weight.
 */
inline DualNeighborGraph merge(const SparseWeightedGraph& text, const SparseWeightedGraph& label, double gamma) {
    if (text.kind != GraphKind::Symmetric || label.kind != GraphKind::Symmetric) {
        throw Error("merge expects symmetric graphs");
    }
    if (text.n_nodes != label.n_nodes) {
        throw Error("node-count mismatch: " + std::to_string(text.n_nodes) + " vs " + std::to_string(label.n_nodes));
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("gamma must be finite and >= 0");
    DualNeighborGraph g;
    g.n_nodes = text.n_nodes;
    g.gamma = gamma;
    g.adjacency.resize(g.n_nodes);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        const auto& a = text.adjacency[i];
        const auto& b = label.adjacency[i];
        auto& out = g.adjacency[i];
        out.reserve(a.size() + b.size());
        std::size_t p = 0, q = 0;
        while (p < a.size() || q < b.size()) {
            if (q == b.size() || (p < a.size() && a[p].target < b[q].target)) {
                out.push_back({a[p].target, a[p].weight, EdgeType::SingleTextual});
                ++p;
            } else if (p == a.size() || b[q].target < a[p].target) {
                out.push_back({b[q].target, b[q].weight, EdgeType::SingleLabel});
                ++q;
            } else {
                out.push_back({a[p].target, a[p].weight * b[q].weight + gamma, EdgeType::Dual});
                ++p;
                ++q;
            }
        }
    }
    return g;
}

/// `src dst weight type` per unordered pair (src < dst).
inline void dump_edges(const DualNeighborGraph& g, std::ostream& out) {
    out.precision(17);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (const auto& e : g.adjacency[i]) {
            if (e.target < i) continue;
            out << i << ' ' << e.target << ' ' << e.weight << ' ' << to_string(e.type) << '\n';
        }
    }
}

} // namespace deuce

#endif // DEUCE_DNG_HPP
