#include "deuce/prediction.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

deuce::EmbeddingBundle bundle_from(const std::vector<std::vector<float>>& pred, const std::vector<std::vector<float>>& cls) {
    deuce::EmbeddingBundle b;
    const std::size_t d = pred.front().size();
    b.textual = deuce::MatrixF(pred.size(), d);
    b.predictive = deuce::MatrixF(pred.size(), d);
    b.class_embeds = deuce::MatrixF(cls.size(), d);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            b.predictive(i, c) = pred[i][c];
            b.textual(i, c) = pred[i][c];
        }
        b.doc_ids.push_back("d" + std::to_string(i));
    }
    for (std::size_t j = 0; j < cls.size(); ++j) {
        for (std::size_t c = 0; c < d; ++c) b.class_embeds(j, c) = cls[j][c];
        b.class_names.push_back("c" + std::to_string(j));
    }
    return b;
}

deuce::MatrixD matrix(std::size_t r, std::size_t c, std::vector<double> v) {
    deuce::MatrixD m(r, c);
    m.data() = std::move(v);
    return m;
}

} // namespace

TEST(Similarity, InnerProducts) {
    const auto b = bundle_from({{1, 0}, {0, 1}, {0.6f, 0.8f}}, {{1, 0}, {0, 1}});
    const auto s = deuce::similarity_matrix(b);
    EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(s(0, 1), 0.0);
    EXPECT_NEAR(s(2, 0), 0.6, 1e-7);
    EXPECT_NEAR(s(2, 1), 0.8, 1e-7);
}

TEST(Edf, WorkedExample) {
    const auto y = deuce::edf_calibrate(matrix(2, 2, {0.1, 0.9, 0.5, 0.7}));
    EXPECT_EQ(y.data(), (std::vector<double>{0.25, 1.0, 0.5, 0.75}));
}

TEST(Edf, AllEqualIsOne) {
    const auto y = deuce::edf_calibrate(matrix(2, 3, std::vector<double>(6, 0.3)));
    for (double v : y.data()) EXPECT_EQ(v, 1.0);
}

TEST(Edf, DistinctEntriesGiveUniformGrid) {
    auto y = deuce::edf_calibrate(matrix(1, 4, {-0.5, 0.1, 0.2, 0.9}));
    auto v = y.data();
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}

TEST(Edf, MatchesCountingOracleWithTies) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng() % 20, c = 1 + rng() % 5;
        deuce::MatrixD s(n, c);
        for (auto& x : s.data()) x = static_cast<double>(rng() % 7) / 7.0;  // heavy ties
        const auto y = deuce::edf_calibrate(s);
        ASSERT_EQ(y.data(), oracle::edf(s).data());
        for (std::size_t a = 0; a < s.size(); ++a) {
            for (std::size_t b = 0; b < s.size(); ++b) {
                if (s.data()[a] < s.data()[b]) {
                    ASSERT_LE(y.data()[a], y.data()[b]);
                }
                if (s.data()[a] == s.data()[b]) {
                    ASSERT_EQ(y.data()[a], y.data()[b]);
                }
            }
        }
    }
}

TEST(Ova, WorkedExamples) {
    EXPECT_EQ(deuce::ova_uncertainty(matrix(1, 3, {1, 0, 0}))[0], 0.0);
    EXPECT_NEAR(deuce::ova_uncertainty(matrix(1, 2, {0.5, 0.5}))[0], std::log(4.0), 1e-12);
    EXPECT_NEAR(deuce::ova_uncertainty(matrix(1, 3, {0.9, 0.1, 0.1}))[0], -std::log(0.729), 1e-12);
}

TEST(Ova, ZeroProbabilityIsInfinite) {
    // Two certain classes: every branch contains a factor (1 - 1).
    EXPECT_EQ(deuce::ova_uncertainty(matrix(1, 2, {1.0, 1.0}))[0], deuce::kInf);
    EXPECT_EQ(deuce::ova_uncertainty(matrix(1, 2, {0.0, 0.0}))[0], deuce::kInf);
}

TEST(Ova, MatchesProductFormula) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> y(2 + rng() % 6);
        for (auto& v : y) v = u(rng);
        const auto got = deuce::ova_uncertainty(matrix(1, y.size(), y))[0];
        ASSERT_NEAR(got, -std::log(oracle::ova_probability(y)), 1e-10);
        ASSERT_GE(got, 0.0);
    }
}

TEST(Ova, DecreasesAsDominantScoreGrows) {
    double prev = deuce::kInf;
    for (double top = 0.5; top <= 1.0; top += 0.05) {
        const double u = deuce::ova_uncertainty(matrix(1, 3, {top, 0.2, 0.3}))[0];
        EXPECT_LT(u, prev);
        prev = u;
    }
}

TEST(Ova, LargeClassCountDoesNotUnderflow) {
    std::vector<double> y(2000, 0.5);
    const double u = deuce::ova_uncertainty(matrix(1, y.size(), y))[0];
    EXPECT_TRUE(std::isfinite(u));
    EXPECT_NEAR(u, 2000 * std::log(2.0), 1e-6);
}

TEST(Randomize, DeterministicUnitRows) {
    std::mt19937_64 rng(1);
    auto b = bundle_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{1, 0, 0}, {0, 1, 0}});
    const auto a1 = deuce::randomize_predictions(b, 42);
    const auto a2 = deuce::randomize_predictions(b, 42);
    const auto a3 = deuce::randomize_predictions(b, 43);
    EXPECT_EQ(a1.predictive, a2.predictive);
    EXPECT_NE(a1.predictive, a3.predictive);
    EXPECT_EQ(a1.textual, b.textual);
    EXPECT_EQ(a1.class_embeds, b.class_embeds);
    for (std::size_t i = 0; i < a1.n_docs(); ++i) EXPECT_NEAR(deuce::l2_norm(a1.predictive.row(i)), 1.0, 1e-6);
}

TEST(PredictLabels, ArgmaxAndRanges) {
    std::mt19937_64 rng(4);
    deuce::EmbeddingBundle b;
    b.predictive = oracle::random_unit_rows(rng, 30, 5);
    b.textual = b.predictive;
    b.class_embeds = oracle::random_unit_rows(rng, 3, 5);
    const auto l = deuce::predict_labels(b);
    for (std::size_t i = 0; i < 30; ++i) {
        auto row = l.raw_similarity.row(i);
        EXPECT_EQ(l.argmax_class[i], std::max_element(row.begin(), row.end()) - row.begin());
        EXPECT_GE(l.uncertainty[i], 0.0);
        for (double y : l.scores.row(i)) {
            EXPECT_GT(y, 0.0);
            EXPECT_LE(y, 1.0);
        }
    }
}
