#ifndef DEUCE_PREDICTION_HPP
#define DEUCE_PREDICTION_HPP

#include "deuce/common.hpp"
#include "deuce/tensor_io.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace deuce {

/// Calibrated one-vs-all label scores for every document.
struct LabelMatrix {
    MatrixD raw_similarity;      ///< N x C inner products
    MatrixD scores;              ///< N x C calibrated scores in (0, 1]
    std::vector<double> uncertainty;
    std::vector<Index> argmax_class;
};

/// Inner products between predictive rows and class rows (N x C).
inline MatrixD similarity_matrix(const EmbeddingBundle& bundle, unsigned threads = 0) {
    const std::size_t n = bundle.n_docs();
    const std::size_t c = bundle.n_classes();
    MatrixD sim(n, c);
    parallel_for(
        n,
        [&](std::size_t i) {
            auto p = bundle.predictive.row(i);
            for (std::size_t j = 0; j < c; ++j) {
                sim(i, j) = dot(p, bundle.class_embeds.row(j));
            }
        },
        threads);
    return sim;
}

/**
 * Maps every entry to the fraction of all N*C entries that are <= it.
 *
 * Equal entries share the count of their whole tie group, so the output is
 * in [1/(NC), 1] and depends only on the rank order of the input.
 */
inline MatrixD edf_calibrate(const MatrixD& sim) {
    const std::size_t total = sim.size();
    MatrixD out(sim.rows(), sim.cols());
    if (total == 0) {
        return out;
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& v = sim.data();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::size_t group_begin = 0;
    while (group_begin < total) {
        std::size_t group_end = group_begin + 1;
        while (group_end < total && v[order[group_end]] == v[order[group_begin]]) {
            ++group_end;
        }
        const double value = static_cast<double>(group_end) / static_cast<double>(total);
        for (std::size_t r = group_begin; r < group_end; ++r) {
            out.data()[order[r]] = value;
        }
        group_begin = group_end;
    }
    return out;
}

/**
 * Log-probability that a document scores high for exactly one class:
 * max_j [ log y_j + sum_{l != j} log(1 - y_l) ].
 *
 * A score of exactly 1 makes every branch except its own -inf.
 */
inline double ova_log_event_probability(std::span<const double> y) {
    double finite_sum = 0.0;
    std::size_t n_certain = 0;
    std::size_t certain_at = 0;
    for (std::size_t l = 0; l < y.size(); ++l) {
        if (y[l] >= 1.0) {
            ++n_certain;
            certain_at = l;
        } else {
            finite_sum += std::log1p(-y[l]);
        }
    }
    double best = -kInf;
    for (std::size_t j = 0; j < y.size(); ++j) {
        double rest;
        if (n_certain == 0) {
            rest = finite_sum - std::log1p(-y[j]);
        } else if (n_certain == 1 && certain_at == j) {
            rest = finite_sum;
        } else {
            continue;
        }
        const double term = std::log(y[j]) + rest;
        if (term > best) {
            best = term;
        }
    }
    return best;
}

/// Self-information -ln p(E_i) per row; +inf when p(E_i) = 0.
inline std::vector<double> ova_uncertainty(const MatrixD& labels) {
    std::vector<double> u(labels.rows());
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const double logp = ova_log_event_probability(labels.row(i));
        u[i] = logp >= 0.0 ? 0.0 : -logp;
    }
    return u;
}

inline LabelMatrix predict_labels(const EmbeddingBundle& bundle, unsigned threads = 0) {
    LabelMatrix out;
    out.raw_similarity = similarity_matrix(bundle, threads);
    out.scores = edf_calibrate(out.raw_similarity);
    out.uncertainty = ova_uncertainty(out.scores);
    out.argmax_class.resize(bundle.n_docs());
    for (std::size_t i = 0; i < bundle.n_docs(); ++i) {
        auto row = out.scores.row(i);
        out.argmax_class[i] = static_cast<Index>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

/// Copy of the bundle whose predictive rows are seeded isotropic Gaussian
/// draws, unit-normalized.
inline EmbeddingBundle randomize_predictions(const EmbeddingBundle& bundle, std::uint64_t rng_seed) {
    EmbeddingBundle out = bundle;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> buf(out.dim());
    for (std::size_t i = 0; i < out.n_docs(); ++i) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& x : buf) {
                x = gauss(rng);
                norm2 += x * x;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        auto row = out.predictive.row(i);
        for (std::size_t c = 0; c < buf.size(); ++c) {
            row[c] = static_cast<float>(buf[c] * inv);
        }
    }
    return out;
}

} // namespace deuce

#endif // DEUCE_PREDICTION_HPP
