#ifndef DEUCE_DENSITY_CLUSTER_HPP
#define DEUCE_DENSITY_CLUSTER_HPP

#include "deuce/common.hpp"
#include "deuce/dng.hpp"

#include <map>
#include <numeric>
#include <ostream>
#include <tuple>

/**
 * @file density_cluster.hpp
 *
 * @brief HDBSCAN over a dual-neighbor graph.
 *
 * Edge lengths are 1 / w_dual. Core distances and mutual reachability are
 * restricted to graph edges, so disconnected components never merge.
 * Merges that happen at the same distance are collapsed into one multiway
 * hierarchy node, which makes the result independent of how tied edges are
 * ordered.
 */

namespace deuce {

inline constexpr std::int32_t kOutlier = -1;

struct ClusterAssignment {
    std::vector<std::int32_t> label;   ///< cluster id or kOutlier
    std::vector<double> membership;    ///< 0 for outliers
    std::size_t n_clusters = 0;
    std::size_t min_cluster_size = 0;

    bool is_clustered(Index i) const { return label[i] != kOutlier; }
};

struct MstEdge {
    Index a;
    Index b;
    double distance;
};

/// Distance to the k-th nearest graph neighbor; the farthest neighbor when
/// the node has fewer than k, +inf for isolated nodes.
inline std::vector<double> core_distances(const DualNeighborGraph& g, std::size_t k) {
    std::vector<double> core(g.n_nodes, kInf);
    std::vector<double> d;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        d.clear();
        for (const auto& e : g.adjacency[i]) d.push_back(1.0 / e.weight);
        if (d.empty()) continue;
        std::sort(d.begin(), d.end());
        core[i] = d[std::min(k, d.size()) - 1];
    }
    return core;
}

/// Mutual reachability max(core_i, core_j, 1/w) for every graph edge (a < b).
inline std::vector<MstEdge> mutual_reachability_edges(const DualNeighborGraph& g, std::span<const double> core) {
    std::vector<MstEdge> edges;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (const auto& e : g.adjacency[i]) {
            if (e.target <= i) continue;
            const double d = std::max({core[i], core[e.target], 1.0 / e.weight});
            edges.push_back({static_cast<Index>(i), e.target, d});
        }
    }
    return edges;
}

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0u); }

    Index find(Index x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns the new root, or the shared root if already joined.
    Index unite(Index a, Index b) {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return a;
    }

private:
    std::vector<Index> parent_;
    std::vector<std::uint8_t> rank_;
};

} // namespace detail

/// Kruskal over the edge list; ties by (a, b).
inline std::vector<MstEdge> minimum_spanning_forest(std::size_t n, std::vector<MstEdge> edges) {
    std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
        return std::tie(x.distance, x.a, x.b) < std::tie(y.distance, y.a, y.b);
    });
    detail::DisjointSets sets(n);
    std::vector<MstEdge> forest;
    for (const auto& e : edges) {
        if (sets.find(e.a) != sets.find(e.b)) {
            sets.unite(e.a, e.b);
            forest.push_back(e);
        }
    }
    return forest;
}

/**
 * Single-linkage hierarchy. Nodes [0, n) are points; internal nodes follow.
 * All forest edges of one distance that touch the same resulting component
 * produce a single node with every merged component as a child.
 */
struct LinkageTree {
    struct Node {
        double distance = 0.0;
        std::size_t size = 1;
        std::vector<Index> children;
    };
    std::size_t n_points = 0;
    std::vector<Node> nodes;
    std::vector<Index> roots;  ///< one per connected component, ordered by smallest point
};

inline LinkageTree build_linkage(std::size_t n, const std::vector<MstEdge>& forest_sorted) {
    LinkageTree tree;
    tree.n_points = n;
    tree.nodes.resize(n);
    std::vector<Index> node_of(n);
    std::iota(node_of.begin(), node_of.end(), 0u);
    detail::DisjointSets sets(n);
    std::vector<std::pair<Index, Index>> pre;
    for (std::size_t p = 0; p < forest_sorted.size();) {
        std::size_t q = p;
        while (q < forest_sorted.size() && forest_sorted[q].distance == forest_sorted[p].distance) ++q;
        pre.clear();
        for (std::size_t e = p; e < q; ++e) {
            pre.emplace_back(sets.find(forest_sorted[e].a), sets.find(forest_sorted[e].b));
        }
        std::vector<Index> involved;
        for (auto [x, y] : pre) {
            involved.push_back(x);
            involved.push_back(y);
        }
        std::sort(involved.begin(), involved.end());
        involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
        std::vector<Index> involved_nodes(involved.size());
        for (std::size_t r = 0; r < involved.size(); ++r) involved_nodes[r] = node_of[involved[r]];
        for (auto [x, y] : pre) sets.unite(x, y);
        std::map<Index, std::vector<Index>> groups;
        for (std::size_t r = 0; r < involved.size(); ++r) groups[sets.find(involved[r])].push_back(involved_nodes[r]);
        for (auto& [root, children] : groups) {
            LinkageTree::Node node;
            node.distance = forest_sorted[p].distance;
            node.size = 0;
            for (Index c : children) node.size += tree.nodes[c].size;
            node.children = std::move(children);
            node_of[root] = static_cast<Index>(tree.nodes.size());
            tree.nodes.push_back(std::move(node));
        }
        p = q;
    }
    std::vector<char> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Index r = sets.find(static_cast<Index>(i));
        if (!seen[r]) {
            seen[r] = 1;
            tree.roots.push_back(node_of[r]);
        }
    }
    return tree;
}

/// One cluster of the condensed tree.
struct CondensedCluster {
    std::int32_t parent = -1;  ///< -1 for a component root
    double birth_lambda = 0.0;
    std::size_t size = 0;
    std::vector<Index> children;
    std::vector<std::pair<Index, double>> departures;  ///< (point, lambda) leaving this cluster
    double stability = 0.0;
};

/// Condensed clusters in creation order (parents before children).
/// Components smaller than `min_size` produce no cluster.
inline std::vector<CondensedCluster> condense(const LinkageTree& tree, std::size_t min_size) {
    std::vector<CondensedCluster> clusters;
    auto collect = [&](Index node, double lambda, std::vector<std::pair<Index, double>>& out) {
        std::vector<Index> stack{node};
        while (!stack.empty()) {
            Index v = stack.back();
            stack.pop_back();
            if (v < tree.n_points) {
                out.emplace_back(v, lambda);
            } else {
                for (auto it = tree.nodes[v].children.rbegin(); it != tree.nodes[v].children.rend(); ++it) {
                    stack.push_back(*it);
                }
            }
        }
    };
    // (cluster id, tree node) work list; creation order is BFS.
    std::vector<std::pair<std::size_t, Index>> work;
    for (Index root : tree.roots) {
        if (tree.nodes[root].size < min_size) continue;
        CondensedCluster c;
        c.size = tree.nodes[root].size;
        clusters.push_back(std::move(c));
        work.emplace_back(clusters.size() - 1, root);
    }
    for (std::size_t w = 0; w < work.size(); ++w) {
        const std::size_t cid = work[w].first;
        Index node = work[w].second;
        while (true) {
            const auto& tn = tree.nodes[node];
            const double lambda = 1.0 / tn.distance;
            std::vector<Index> big;
            for (Index ch : tn.children) {
                if (tree.nodes[ch].size >= min_size) big.push_back(ch);
            }
            for (Index ch : tn.children) {
                if (tree.nodes[ch].size < min_size || big.size() == 0) {
                    collect(ch, lambda, clusters[cid].departures);
                }
            }
            if (big.size() == 1) {
                node = big.front();
                continue;
            }
            for (Index ch : big) {
                CondensedCluster c;
                c.parent = static_cast<std::int32_t>(cid);
                c.birth_lambda = lambda;
                c.size = tree.nodes[ch].size;
                clusters.push_back(std::move(c));
                clusters[cid].children.push_back(static_cast<Index>(clusters.size() - 1));
                work.emplace_back(clusters.size() - 1, ch);
            }
            break;
        }
    }
    for (auto& c : clusters) {
        double s = 0.0;
        for (const auto& [p, l] : c.departures) s += l - c.birth_lambda;
        for (Index ch : c.children) s += static_cast<double>(clusters[ch].size) * (clusters[ch].birth_lambda - c.birth_lambda);
        c.stability = s;
    }
    return clusters;
}

/// Excess-of-mass selection; a parent wins ties against its children.
inline std::vector<char> select_clusters(const std::vector<CondensedCluster>& clusters) {
    std::vector<char> selected(clusters.size(), 0);
    std::vector<double> subtree(clusters.size(), 0.0);
    for (std::size_t r = clusters.size(); r-- > 0;) {
        const auto& c = clusters[r];
        if (c.children.empty()) {
            selected[r] = 1;
            subtree[r] = c.stability;
            continue;
        }
        double child_sum = 0.0;
        for (Index ch : c.children) child_sum += subtree[ch];
        if (child_sum > c.stability) {
            subtree[r] = child_sum;
        } else {
            selected[r] = 1;
            subtree[r] = c.stability;
            std::vector<Index> stack(c.children.begin(), c.children.end());
            while (!stack.empty()) {
                Index v = stack.back();
                stack.pop_back();
                selected[v] = 0;
                stack.insert(stack.end(), clusters[v].children.begin(), clusters[v].children.end());
            }
        }
    }
    return selected;
}

/**
 * Flat labels and memberships from a selection.
 *
 * A point belongs to the selected cluster above its departure cluster.
 * In a selected component root only points leaving at the root's largest
 * direct lambda are kept. Membership is lambda_point / lambda_max of the
 * cluster. Ids are assigned in order of each cluster's smallest member.
 */
inline ClusterAssignment label_points(std::size_t n, const std::vector<CondensedCluster>& clusters,
                                      const std::vector<char>& selected, std::size_t min_size) {
    ClusterAssignment out;
    out.label.assign(n, kOutlier);
    out.membership.assign(n, 0.0);
    out.min_cluster_size = min_size;

    std::vector<double> root_threshold(clusters.size(), 0.0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (clusters[c].parent != -1) continue;
        double m = 0.0;
        for (const auto& [p, l] : clusters[c].departures) m = std::max(m, l);
        for (Index ch : clusters[c].children) m = std::max(m, clusters[ch].birth_lambda);
        root_threshold[c] = m;
    }

    std::vector<std::int32_t> owner(n, -1);
    std::vector<double> point_lambda(n, 0.0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (const auto& [p, l] : clusters[c].departures) {
            std::int32_t s = static_cast<std::int32_t>(c);
            while (s != -1 && !selected[s]) s = clusters[s].parent;
            if (s == -1) continue;
            if (clusters[s].parent == -1 && l < root_threshold[s]) continue;
            owner[p] = s;
            point_lambda[p] = l;
        }
    }

    std::vector<double> max_lambda(clusters.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] != -1) max_lambda[owner[i]] = std::max(max_lambda[owner[i]], point_lambda[i]);
    }
    std::vector<std::int32_t> id_of(clusters.size(), -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] == -1) continue;
        if (id_of[owner[i]] == -1) id_of[owner[i]] = next++;
        out.label[i] = id_of[owner[i]];
        const double ml = max_lambda[owner[i]];
        out.membership[i] = ml > 0.0 ? std::clamp(point_lambda[i] / ml, 0.0, 1.0) : 1.0;
    }
    out.n_clusters = static_cast<std::size_t>(next);
    return out;
}

inline ClusterAssignment cluster(const DualNeighborGraph& g, std::size_t min_cluster_size) {
    if (min_cluster_size < 2) throw Error("minimum cluster size must be >= 2");
    const auto core = core_distances(g, min_cluster_size);
    auto forest = minimum_spanning_forest(g.n_nodes, mutual_reachability_edges(g, core));
    const auto tree = build_linkage(g.n_nodes, forest);
    const auto condensed = condense(tree, min_cluster_size);
    const auto selected = select_clusters(condensed);
    return label_points(g.n_nodes, condensed, selected, min_cluster_size);
}

/// `doc_id cluster_id membership` rows; outliers print cluster -1.
inline void dump_clusters(const ClusterAssignment& a, std::span<const std::string> doc_ids, std::ostream& out) {
    out.precision(17);
    for (std::size_t i = 0; i < a.label.size(); ++i) {
        out << doc_ids[i] << ' ' << a.label[i] << ' ' << a.membership[i] << '\n';
    }
}

} // namespace deuce

#endif // DEUCE_DENSITY_CLUSTER_HPP
