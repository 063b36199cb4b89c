#ifndef DEUCE_PIPELINE_HPP
#define DEUCE_PIPELINE_HPP

#include "deuce/acquisition.hpp"
#include "deuce/baselines.hpp"
#include "deuce/common.hpp"
#include "deuce/density_cluster.hpp"
#include "deuce/dng.hpp"
#include "deuce/knn_graph.hpp"
#include "deuce/metrics.hpp"
#include "deuce/prediction.hpp"
#include "deuce/tensor_io.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace deuce {

struct PipelineConfig {
    std::size_t k = 500;
    std::size_t k_r = 3;
    double gamma = 1.0;
    std::size_t b = 0;
    std::size_t n_starts = 10;
    std::uint64_t rng_seed = 0;
    StrategyKind strategy = StrategyKind::Deuce;
    bool randomize_predictions = false;
    unsigned threads = 0;  ///< 0 = DEUCE_THREADS or hardware concurrency; never echoed
};

/// Per-stage seeds are fixed offsets from the run seed.
enum class SeedStream : std::uint64_t { RandomizePredictions = 1, RandomBaseline = 2 };

inline std::uint64_t derive_seed(std::uint64_t run_seed, SeedStream stream) {
    return run_seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(stream);
}

/// Everything computed on the way to a DEUCE selection.
struct PipelineArtifacts {
    LabelMatrix labels;
    SparseWeightedGraph textual_graph;  ///< symmetric
    SparseWeightedGraph label_graph;    ///< symmetric
    DualNeighborGraph dng;
    ClusterAssignment clusters;
    PropagatedUncertainty propagated;
};

struct PipelineOutput {
    SelectionResult result;
    std::optional<SelectionReport> report;
    std::optional<PipelineArtifacts> artifacts;
    std::vector<std::string> warnings;
    std::size_t effective_k = 0;
};

inline void validate_config(const PipelineConfig& c, std::size_t n) {
    if (c.k < 2) throw Error("k must be >= 2", "config");
    if (c.k_r < 2) throw Error("k_r must be >= 2", "config");
    if (!(c.gamma >= 0.0) || !std::isfinite(c.gamma)) throw Error("gamma must be finite and >= 0", "config");
    if (c.n_starts < 1) throw Error("n_starts must be >= 1", "config");
    if (c.b < 1 || c.b > n) {
        throw Error("budget b = " + std::to_string(c.b) + " must be in [1, " + std::to_string(n) + "]", "config");
    }
    if (n < 3) throw Error("at least 3 documents are required", "config");
}

inline Json config_echo(const PipelineConfig& c, std::size_t effective_k) {
    Json j;
    j["strategy"] = std::string(to_string(c.strategy));
    j["k"] = effective_k;
    j["k_requested"] = c.k;
    j["k_r"] = c.k_r;
    j["gamma"] = c.gamma;
    j["b"] = c.b;
    j["n_starts"] = c.n_starts;
    j["rng_seed"] = c.rng_seed;
    j["randomize_predictions"] = c.randomize_predictions;
    return j;
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.what(), stage);
    } catch (const std::exception& e) {
        throw Error(e.what(), stage);
    }
}

/// Builds the dual-neighbor graph and cluster-propagated uncertainty.
inline PipelineArtifacts build_artifacts(const EmbeddingBundle& bundle, std::size_t k, std::size_t k_r, double gamma,
                                         unsigned threads = 0) {
    PipelineArtifacts a;
    a.labels = run_stage("prediction", [&] { return predict_labels(bundle, threads); });
    a.textual_graph = run_stage("knn-textual", [&] {
        return symmetrize(normalize_graph(build_knn(bundle.textual, MetricSpaceKind::Textual, k, threads)));
    });
    a.label_graph = run_stage("knn-label", [&] {
        return symmetrize(normalize_graph(build_knn(a.labels.scores, MetricSpaceKind::Label, k, threads)));
    });
    a.dng = run_stage("merge", [&] { return merge(a.textual_graph, a.label_graph, gamma); });
    a.clusters = run_stage("cluster", [&] { return cluster(a.dng, k_r); });
    a.propagated = run_stage("propagate", [&] { return propagate(a.labels.uncertainty, a.clusters, a.dng); });
    return a;
}

inline SelectionReport make_report(const EmbeddingBundle& bundle, std::span<const Index> selected) {
    if (!bundle.gold_labels) throw Error("bundle has no gold labels");
    SelectionReport r;
    r.b = selected.size();
    std::vector<Index> labs;
    labs.reserve(selected.size());
    for (Index s : selected) labs.push_back((*bundle.gold_labels)[s]);
    r.class_counts = class_counts(labs, bundle.n_classes());
    r.imb = imbalance_from_counts(r.class_counts);
    r.diversity = bundle.reference ? diversity(*bundle.reference, selected) : diversity(bundle.textual, selected);
    return r;
}

inline Json report_to_json(const SelectionReport& r) {
    Json j;
    j["b"] = r.b;
    j["imb"] = number_to_json(r.imb);
    j["diversity"] = number_to_json(r.diversity);
    j["class_counts"] = r.class_counts;
    return j;
}

/**
 * Full selection run over a loaded bundle. k is clamped to N - 1 with a
 * warning. Errors carry the failing stage name.
 */
inline PipelineOutput run_pipeline(const EmbeddingBundle& input, const PipelineConfig& config,
                                   bool keep_artifacts = false) {
    const std::size_t n = input.n_docs();
    validate_config(config, n);
    PipelineOutput out;
    out.effective_k = config.k;
    if (config.k >= n) {
        out.effective_k = n - 1;
        out.warnings.push_back("k = " + std::to_string(config.k) + " clamped to " + std::to_string(n - 1) +
                               " for " + std::to_string(n) + " documents");
    }

    std::optional<EmbeddingBundle> randomized;
    if (config.randomize_predictions) {
        randomized = run_stage("randomize", [&] {
            return randomize_predictions(input, derive_seed(config.rng_seed, SeedStream::RandomizePredictions));
        });
    }
    const EmbeddingBundle& bundle = randomized ? *randomized : input;

    auto& res = out.result;
    res.n_docs = n;
    res.rng_seed = config.rng_seed;
    res.config_echo = config_echo(config, out.effective_k);

    switch (config.strategy) {
    case StrategyKind::Deuce: {
        auto art = build_artifacts(bundle, out.effective_k, config.k_r, config.gamma, config.threads);
        auto acq = run_stage("acquisition",
                             [&] { return select_candidates(art.dng, art.propagated, config.b, config.n_starts, config.threads); });
        res.selected = acq.best.selected;
        for (const auto& c : acq.candidates) res.candidate_scores[c.start_index] = c.score;
        if (keep_artifacts) out.artifacts = std::move(art);
        break;
    }
    case StrategyKind::Random:
        res.selected = run_stage("baseline", [&] {
            return select_random(n, config.b, derive_seed(config.rng_seed, SeedStream::RandomBaseline));
        });
        break;
    case StrategyKind::Entropy:
        res.selected = run_stage("baseline", [&] {
            const auto labels = predict_labels(bundle, config.threads);
            return select_entropy(labels.uncertainty, config.b);
        });
        break;
    case StrategyKind::Coreset:
        res.selected = run_stage("baseline", [&] {
            return select_coreset(bundle.textual, config.b, std::nullopt, nullptr, config.threads);
        });
        break;
    }
    res.selected_ids.reserve(res.selected.size());
    for (Index s : res.selected) res.selected_ids.push_back(bundle.doc_ids[s]);
    run_stage("validate", [&] { validate_selection(res); });

    if (bundle.gold_labels && config.b < n) {
        out.report = run_stage("report", [&] { return make_report(bundle, res.selected); });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSpec {
    std::size_t n_docs = 0;
    std::size_t n_classes = 0;
    std::size_t dim = 0;
    std::vector<double> class_proportions;
    double cluster_spread = 0.5;
    std::uint64_t rng_seed = 0;
};

/// Largest-remainder apportionment of n over the proportions; leftover
/// units go to the largest fractional parts, ties by lower class index.
inline std::vector<std::size_t> apportion(std::size_t n, std::span<const double> proportions) {
    std::vector<std::size_t> counts(proportions.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < proportions.size(); ++j) {
        const double exact = proportions[j] * static_cast<double>(n);
        counts[j] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[j];
        rem.emplace_back(exact - std::floor(exact), j);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n && r < rem.size(); ++r, ++assigned) ++counts[rem[r].second];
    return counts;
}

inline void validate_synthetic(const SyntheticSpec& s) {
    if (s.n_docs < 1 || s.n_classes < 1 || s.dim < 1) throw Error("synthetic spec needs positive sizes");
    if (s.class_proportions.size() != s.n_classes) {
        throw Error("invalid proportions: " + std::to_string(s.class_proportions.size()) + " given for " +
                    std::to_string(s.n_classes) + " classes");
    }
    double total = 0.0;
    for (double p : s.class_proportions) {
        if (!(p > 0.0)) throw Error("invalid proportions: every proportion must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("invalid proportions: sum is " + std::to_string(total));
    if (!(s.cluster_spread >= 0.0) || !std::isfinite(s.cluster_spread)) throw Error("cluster_spread must be >= 0");
}

/**
 * Class centroids drawn uniformly on the unit sphere. Textual and
 * predictive rows are independent noisy copies of the own-class centroid
 * (noise of expected norm `cluster_spread`), unit-normalized; class rows
 * are the centroids. Document order is a seeded shuffle of the classes.
 */
inline EmbeddingBundle generate_synthetic(const SyntheticSpec& s) {
    validate_synthetic(s);
    std::mt19937_64 rng(s.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t d = s.dim;
    auto unit_gaussian = [&](std::vector<double>& v) {
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (auto& x : v) {
                x = gauss(rng);
                n2 += x * x;
            }
        } while (n2 == 0.0);
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;
    };

    EmbeddingBundle b;
    b.class_embeds = MatrixF(s.n_classes, d);
    std::vector<std::vector<double>> centroids(s.n_classes, std::vector<double>(d));
    for (std::size_t j = 0; j < s.n_classes; ++j) {
        unit_gaussian(centroids[j]);
        for (std::size_t c = 0; c < d; ++c) b.class_embeds(j, c) = static_cast<float>(centroids[j][c]);
        b.class_names.push_back("class" + std::to_string(j));
    }

    const auto counts = apportion(s.n_docs, s.class_proportions);
    std::vector<Index> labels;
    labels.reserve(s.n_docs);
    for (std::size_t j = 0; j < counts.size(); ++j) labels.insert(labels.end(), counts[j], static_cast<Index>(j));
    for (std::size_t i = labels.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(labels[i - 1], labels[pick(rng)]);
    }

    const double noise_scale = s.cluster_spread / std::sqrt(static_cast<double>(d));
    auto noisy_copy = [&](const std::vector<double>& centre, std::span<float> out) {
        std::vector<double> v(d);
        double n2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            v[c] = centre[c] + noise_scale * gauss(rng);
            n2 += v[c] * v[c];
        }
        const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 1.0;
        for (std::size_t c = 0; c < d; ++c) out[c] = static_cast<float>(v[c] * inv);
    };
    b.textual = MatrixF(s.n_docs, d);
    b.predictive = MatrixF(s.n_docs, d);
    for (std::size_t i = 0; i < s.n_docs; ++i) {
        noisy_copy(centroids[labels[i]], b.textual.row(i));
    }
    for (std::size_t i = 0; i < s.n_docs; ++i) {
        noisy_copy(centroids[labels[i]], b.predictive.row(i));
    }
    for (std::size_t i = 0; i < s.n_docs; ++i) b.doc_ids.push_back("doc" + std::to_string(i));
    b.gold_labels = std::move(labels);
    return b;
}

} // namespace deuce

#endif // DEUCE_PIPELINE_HPP
