#ifndef DEUCE_BASELINES_HPP
#define DEUCE_BASELINES_HPP

#include "deuce/common.hpp"

#include <numeric>
#include <optional>
#include <random>
#include <string_view>

namespace deuce {

enum class StrategyKind { Random, Entropy, Coreset, Deuce };

inline std::string_view to_string(StrategyKind s) {
    switch (s) {
    case StrategyKind::Random: return "random";
    case StrategyKind::Entropy: return "entropy";
    case StrategyKind::Coreset: return "coreset";
    case StrategyKind::Deuce: return "deuce";
    }
    return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
    if (s == "random") return StrategyKind::Random;
    if (s == "entropy") return StrategyKind::Entropy;
    if (s == "coreset") return StrategyKind::Coreset;
    if (s == "deuce") return StrategyKind::Deuce;
    throw Error("unknown strategy '" + std::string(s) + "'");
}

namespace detail {
inline void check_budget(std::size_t n, std::size_t b) {
    if (b > n) throw Error("budget b = " + std::to_string(b) + " exceeds " + std::to_string(n) + " documents");
}
} // namespace detail

/// Uniform sample without replacement (partial Fisher-Yates).
inline std::vector<Index> select_random(std::size_t n, std::size_t b, std::uint64_t rng_seed) {
    detail::check_budget(n, b);
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::mt19937_64 rng(rng_seed);
    for (std::size_t i = 0; i < b; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(b);
    return idx;
}

/// Top-b uncertainty, ties by lower index.
inline std::vector<Index> select_entropy(std::span<const double> u, std::size_t b) {
    detail::check_budget(u.size(), b);
    std::vector<Index> idx(u.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end(),
                      [&](Index a, Index c) { return u[a] != u[c] ? u[a] > u[c] : a < c; });
    idx.resize(b);
    return idx;
}

/// Greedy k-center in Euclidean space. Starts from the lowest index of
/// maximal norm unless `start` is given; ties by lower index. `radii`
/// receives each pick's distance to the previous picks.
template <typename T>
std::vector<Index> select_coreset(const Matrix<T>& points, std::size_t b, std::optional<Index> start = std::nullopt,
                                  std::vector<double>* radii = nullptr, unsigned threads = 0) {
    const std::size_t n = points.rows();
    detail::check_budget(n, b);
    std::vector<Index> out;
    if (b == 0) return out;
    Index first = 0;
    if (start) {
        if (*start >= n) throw Error("coreset start out of range");
        first = *start;
    } else {
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double norm = l2_norm(points.row(i));
            if (norm > best) {
                best = norm;
                first = static_cast<Index>(i);
            }
        }
    }
    std::vector<double> mind(n, kInf);
    std::vector<char> chosen(n, 0);
    if (radii) {
        radii->clear();
        radii->push_back(kInf);
    }
    Index next = first;
    while (true) {
        out.push_back(next);
        chosen[next] = 1;
        mind[next] = 0.0;
        if (out.size() == b) break;
        auto rs = points.row(next);
        parallel_for(
            n,
            [&](std::size_t i) {
                if (chosen[i]) return;
                auto ri = points.row(i);
                double acc = 0.0;
                for (std::size_t c = 0; c < ri.size(); ++c) {
                    const double d = static_cast<double>(ri[c]) - static_cast<double>(rs[c]);
                    acc += d * d;
                }
                mind[i] = std::min(mind[i], std::sqrt(acc));
            },
            threads);
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i] && mind[i] > best) {
                best = mind[i];
                next = static_cast<Index>(i);
            }
        }
        if (radii) radii->push_back(best);
    }
    return out;
}

} // namespace deuce

#endif // DEUCE_BASELINES_HPP
