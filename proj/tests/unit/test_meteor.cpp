#include <gtest/gtest.h>

#include <cmath>

#include "fhirqa/error.hpp"
#include "fhirqa/meteor.hpp"
#include "meteor_oracle.hpp"
#include "support.hpp"

using namespace fhirqa;

TEST(Tokenize, LowercasesAndStripsEdgePunctuation) {
    EXPECT_EQ(tokenize("The cat, sat."), (std::vector<std::string>{"the", "cat", "sat"}));
    EXPECT_EQ(tokenize("  \"Hello\"  -- world!\n"), (std::vector<std::string>{"hello", "world"}));
    EXPECT_EQ(tokenize("120/80 mg/dL don't"), (std::vector<std::string>{"120/80", "mg/dl", "don't"}));
    EXPECT_TRUE(tokenize(" ... ").empty());
}

TEST(Meteor, HandDerivedFixtures) {
    EXPECT_NEAR(meteor("a b c d e f", "a b c d e f"), 0.9976852, 1e-7);
    EXPECT_NEAR(meteor("a b c d e f", "a b c d e f"), 1.0 - 0.5 / 216.0, 1e-12);
    const double expected = (10 * 0.5 / 9.5) * (1 - 0.5 * std::pow(1.0 / 3, 3));
    EXPECT_NEAR(meteor("the cat sat", "the cat sat on the mat"), expected, 1e-12);
    EXPECT_NEAR(expected, 0.5165692, 1e-7);
    EXPECT_NEAR(meteor("word", "word"), 0.5, 1e-12);
    EXPECT_EQ(meteor("alpha beta", "gamma delta"), 0.0);
    EXPECT_EQ(meteor("", "something"), 0.0);
    EXPECT_EQ(meteor("something", ""), 0.0);
}

TEST(Meteor, ChunksCountBrokenOrder) {
    const std::vector<std::string> c{"b", "a"}, r{"a", "b"};
    const auto al = meteor_align(c, r);
    EXPECT_EQ(al.matches, 2u);
    EXPECT_EQ(al.chunks, 2u);
    EXPECT_TRUE(al.exact);
    // "the" twice: the adjacent choice gives a single chunk.
    const auto t = tokenize("the cat"), u = tokenize("the dog the cat");
    const auto al2 = meteor_align(t, u);
    EXPECT_EQ(al2.matches, 2u);
    EXPECT_EQ(al2.chunks, 1u);
    EXPECT_EQ(al2.pairs[0], (AlignedPair{0, 2, MatchStage::exact}));
}

TEST(Meteor, AlignmentMatchesExhaustiveSearch) {
    std::size_t checked = 0;
    test::for_each_canonical_pair(5, [&](const std::vector<std::string>& c, const std::vector<std::string>& r) {
        const auto al = meteor_align(c, r);
        const auto [m, ch] = test::brute_force_alignment(c, r);
        ++checked;
        ASSERT_EQ(al.matches, m);
        ASSERT_EQ(al.chunks, ch);
        ASSERT_TRUE(al.exact);
    });
    EXPECT_GT(checked, 10000u);
}

TEST(Meteor, ScoreProperties) {
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"your blood pressure was normal", "blood pressure normal on your last visit"},
        {"you take aspirin daily", "you take aspirin every day"},
        {"no allergies recorded", "you have a penicillin allergy"}};
    for (const auto& [c, r] : pairs) {
        const double s = meteor(c, r);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        EXPECT_LE(s, meteor(r, r));
    }
}

TEST(Meteor, StemStage) {
    MeteorConfig exact_only;
    exact_only.stages = {MatchStage::exact};
    EXPECT_EQ(meteor("running dogs", "run dog", exact_only), 0.0);
    const auto al = meteor_align(tokenize("running dogs"), tokenize("run dog"));
    EXPECT_EQ(al.matches, 2u);
    EXPECT_EQ(al.pairs[0].stage, MatchStage::stem);
    // Exact matches are claimed before stems.
    const auto mixed = meteor_align(tokenize("run running"), tokenize("running"));
    ASSERT_EQ(mixed.matches, 1u);
    EXPECT_EQ(mixed.pairs[0], (AlignedPair{1, 0, MatchStage::exact}));
}

TEST(Meteor, SynonymStage) {
    const auto lex = SynonymLexicon::parse("# medical\nshot, vaccine, Immunization\nsolo\n\nmedicine,drug\n");
    EXPECT_EQ(lex.synsets(), 2u);
    EXPECT_TRUE(lex.synonyms("shot", "immunization"));
    EXPECT_TRUE(lex.synonyms("drug", "medicine"));
    EXPECT_FALSE(lex.synonyms("shot", "drug"));
    EXPECT_FALSE(lex.synonyms("solo", "solo"));

    test::TempDir dir;
    write_file(dir / "syn.txt", "shot,vaccine\n");
    MeteorConfig cfg;
    cfg.with_lexicon_file(dir / "syn.txt");
    EXPECT_EQ(cfg.stages.back(), MatchStage::synonym);
    EXPECT_EQ(meteor("last shot", "last vaccine"), meteor("last shot", "last dose"));
    EXPECT_EQ(meteor("last shot", "last vaccine", cfg), meteor("last shot", "last shot"));
    EXPECT_THROW(SynonymLexicon::load(dir / "missing.txt"), IoError);
}

TEST(Meteor, ConfigValidation) {
    EXPECT_EQ(parse_stages("exact,stem"), (std::vector<MatchStage>{MatchStage::exact, MatchStage::stem}));
    EXPECT_THROW(parse_stages("exact,wordnet"), ValidationError);
    EXPECT_THROW(parse_stages("exact,exact"), ValidationError);
    MeteorConfig c;
    c.stages = {MatchStage::exact, MatchStage::synonym};
    EXPECT_THROW(c.validate(), ValidationError);
    c.stages = {};
    EXPECT_THROW(c.validate(), ValidationError);
    c = MeteorConfig{};
    c.fmean_recall_weight = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_NO_THROW(MeteorConfig{}.validate());
}

TEST(Meteor, SearchBudgetFallsBackToMaximalMatching) {
    std::vector<std::string> c, r;
    for (int i = 0; i < 40; ++i) {
        c.push_back(i % 2 ? "a" : "b");
        r.push_back(i % 3 ? "a" : "b");
    }
    MeteorConfig tight;
    tight.search_budget = 1;
    const auto fast = meteor_align(c, r, tight);
    const auto full = meteor_align(c, r);
    EXPECT_EQ(fast.matches, full.matches);
    EXPECT_GE(fast.chunks, full.chunks);
    EXPECT_FALSE(fast.exact);
}

TEST(Meteor, CorpusMeanAndAggregate) {
    const std::vector<std::pair<std::string, std::string>> pairs{{"a b c d e f", "a b c d e f"}, {"x", "y"}};
    const auto mean = corpus_meteor(pairs);
    EXPECT_NEAR(mean.mean, 0.4988426, 1e-7);
    EXPECT_EQ(mean.per_example.size(), 2u);
    EXPECT_FALSE(mean.aggregate);

    const auto agg = corpus_meteor(pairs, {}, true);
    EXPECT_TRUE(agg.aggregate);
    EXPECT_DOUBLE_EQ(agg.mean, meteor_from_stats(MeteorStats{7, 7, 6, 1}));
    EXPECT_THROW(corpus_meteor({}), ValidationError);
    EXPECT_EQ(to_json(mean)["per_example"].size(), 2u);
}
