#include <gtest/gtest.h>

#include <random>

#include "fhirqa/classification.hpp"
#include "fhirqa/error.hpp"

using namespace fhirqa;

namespace {

using L = RelevanceLabel;

// Recomputes every metric straight from the vectors.
struct Oracle {
    double accuracy, precision, recall, f1;
};

Oracle brute_force(const std::vector<L>& gold, const std::vector<L>& pred) {
    double correct = 0, predicted_pos = 0, actual_pos = 0, true_pos = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        correct += gold[i] == pred[i];
        predicted_pos += pred[i] == L::relevant;
        actual_pos += gold[i] == L::relevant;
        true_pos += gold[i] == L::relevant && pred[i] == L::relevant;
    }
    Oracle o{};
    o.accuracy = correct / static_cast<double>(gold.size());
    o.precision = predicted_pos > 0 ? true_pos / predicted_pos : 0.0;
    o.recall = actual_pos > 0 ? true_pos / actual_pos : 0.0;
    o.f1 = o.precision + o.recall > 0 ? 2 * o.precision * o.recall / (o.precision + o.recall) : 0.0;
    return o;
}

}  // namespace

TEST(Classification, FixedConfusion) {
    const auto r = classification_report(ConfusionCounts{32, 1, 2, 215});
    EXPECT_NEAR(r.precision * 100, 96.97, 0.005);
    EXPECT_NEAR(r.recall * 100, 94.12, 0.005);
    EXPECT_NEAR(r.f1 * 100, 95.52, 0.005);
    EXPECT_NEAR(r.accuracy * 100, 98.80, 0.005);
    EXPECT_FALSE(r.precision_undefined || r.recall_undefined || r.f1_undefined);
}

TEST(Classification, CountsFromVectors) {
    const std::vector<L> gold{L::relevant, L::relevant, L::irrelevant, L::irrelevant, L::relevant};
    const std::vector<L> pred{L::relevant, L::irrelevant, L::relevant, L::irrelevant, L::relevant};
    EXPECT_EQ(count_confusion(gold, pred), (ConfusionCounts{2, 1, 1, 1}));
    EXPECT_THROW(count_confusion(gold, std::vector<L>{L::relevant}), ValidationError);
}

TEST(Classification, ZeroDivisionIsFlagged) {
    const auto none_predicted = classification_report(ConfusionCounts{0, 0, 3, 7});
    EXPECT_EQ(none_predicted.precision, 0.0);
    EXPECT_TRUE(none_predicted.precision_undefined);
    EXPECT_FALSE(none_predicted.recall_undefined);
    EXPECT_TRUE(none_predicted.f1_undefined);

    const auto all_negative = classification_report(ConfusionCounts{0, 0, 0, 5});
    EXPECT_EQ(all_negative.accuracy, 1.0);
    EXPECT_TRUE(all_negative.recall_undefined);
    const auto j = to_json(all_negative);
    EXPECT_EQ(j["zero_division"], Json::array({"precision", "recall", "f1"}));

    EXPECT_THROW(classification_report(ConfusionCounts{}), ValidationError);
}

TEST(Classification, MatchesBruteForceOnRandomVectors) {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + gen() % 1000;
        const double p_gold = std::uniform_real_distribution<>(0, 1)(gen);
        const double p_flip = std::uniform_real_distribution<>(0, 1)(gen);
        std::vector<L> gold(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = std::bernoulli_distribution(p_gold)(gen) ? L::relevant : L::irrelevant;
            const bool flip = std::bernoulli_distribution(p_flip)(gen);
            pred[i] = flip ? (gold[i] == L::relevant ? L::irrelevant : L::relevant) : gold[i];
        }
        const auto r = classification_report(count_confusion(gold, pred));
        const auto o = brute_force(gold, pred);
        ASSERT_EQ(r.accuracy, o.accuracy) << trial;
        ASSERT_EQ(r.precision, o.precision) << trial;
        ASSERT_EQ(r.recall, o.recall) << trial;
        ASSERT_EQ(r.f1, o.f1) << trial;
    }
}

TEST(Classification, PrecisionRecallIgnoreTrueNegatives) {
    const auto a = classification_report(ConfusionCounts{5, 2, 3, 0});
    const auto b = classification_report(ConfusionCounts{5, 2, 3, 1000});
    EXPECT_EQ(a.precision, b.precision);
    EXPECT_EQ(a.recall, b.recall);
    EXPECT_EQ(a.f1, b.f1);
    EXPECT_NE(a.accuracy, b.accuracy);
}

TEST(Classification, JsonRoundTrip) {
    const auto r = classification_report(ConfusionCounts{32, 1, 2, 215});
    const auto back = classification_report_from_json(to_json(r));
    EXPECT_EQ(back.counts, r.counts);
    EXPECT_EQ(back.f1, r.f1);
}
