#include <gtest/gtest.h>

#include <regex>
#include <set>

#include "fhirqa/error.hpp"
#include "fhirqa/pipeline.hpp"
#include "support.hpp"

using namespace fhirqa;

namespace {

CompactResource resource(const std::string& id) {
    CompactResource r;
    r.resource_type = ResourceType::Condition;
    r.resource_id = id;
    r.patient_id = "p1";
    r.body = Json{{"code", "x"}};
    r.label = "Condition " + id;
    return r;
}

std::shared_ptr<CallbackBackend> callback(CallbackBackend::Fn fn) { return std::make_shared<CallbackBackend>(std::move(fn)); }

// Independent reading of the relevance contract: the leftmost match of
// (ir)?relevant decides, since "irrelevant" starts before the "relevant" inside it.
std::optional<RelevanceLabel> oracle_relevance(const std::string& raw) {
    std::string lower = raw;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const std::regex re("(ir)?relevant");
    std::smatch m;
    if (!std::regex_search(lower, m, re)) return std::nullopt;
    return m[1].matched ? RelevanceLabel::irrelevant : RelevanceLabel::relevant;
}

}  // namespace

TEST(ParseRelevance, Examples) {
    EXPECT_EQ(parse_relevance("Relevant."), RelevanceLabel::relevant);
    EXPECT_EQ(parse_relevance("  relevant"), RelevanceLabel::relevant);
    EXPECT_EQ(parse_relevance("irrelevant..."), RelevanceLabel::irrelevant);
    EXPECT_EQ(parse_relevance("IRRELEVANT"), RelevanceLabel::irrelevant);
    EXPECT_EQ(parse_relevance("This resource is irrelevant, not relevant"), RelevanceLabel::irrelevant);
    EXPECT_EQ(parse_relevance("Answer: relevant (not irrelevant)"), RelevanceLabel::relevant);
    EXPECT_THROW(parse_relevance("I cannot say."), RelevanceParseError);
    EXPECT_THROW(parse_relevance(""), RelevanceParseError);
    try {
        parse_relevance("garbage");
    } catch (const RelevanceParseError& e) {
        EXPECT_EQ(e.raw(), "garbage");
    }
}

TEST(ParseRelevance, PropertyAgainstRegexOracle) {
    const std::vector<std::string> pieces{"relevant", "Irrelevant", "RELEVANT.", "ir", "rele", "vant", "the",
                                          "resource", "is", "not", "\n", "  ", "irr", "relevance", "-", "Relevant!"};
    std::mt19937_64 gen(2024);
    int with_keyword = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        std::string s;
        const auto len = gen() % 7;
        for (std::size_t i = 0; i < len; ++i) {
            s += pieces[gen() % pieces.size()];
            if (gen() % 2) s += ' ';
        }
        const auto expected = oracle_relevance(s);
        if (expected) {
            ++with_keyword;
            EXPECT_EQ(parse_relevance(s), *expected) << s;
        } else {
            EXPECT_THROW(parse_relevance(s), RelevanceParseError) << s;
        }
    }
    EXPECT_GT(with_keyword, 1000);
    EXPECT_LT(with_keyword, 4900);
}

TEST(Policies, StringForms) {
    EXPECT_EQ(parse_policy_from_string("retry"), ParsePolicy::retry);
    EXPECT_EQ(parse_policy_from_string("wrong"), ParsePolicy::wrong);
    EXPECT_EQ(fallback_policy_from_string("answer-anyway"), FallbackPolicy::answer_anyway);
    EXPECT_EQ(fallback_policy_from_string("refuse"), FallbackPolicy::refuse);
    EXPECT_FALSE(parse_policy_from_string("maybe"));
    EXPECT_EQ(to_string(FallbackPolicy::answer_anyway), "answer-anyway");
}

TEST(Classify, ParsePolicies) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("cls");
    client->register_backend("cls", callback([](const CompletionRequest& r) {
        return r.sample == 0 ? std::string("hmm") : std::string("Relevant");
    }));
    PipelineOptions o;
    const auto wrong = try_classify(*client, ep, "q", resource("a"), o);
    EXPECT_FALSE(wrong.label);
    EXPECT_EQ(wrong.calls, 1);
    EXPECT_EQ(wrong.raw, "hmm");
    EXPECT_THROW(classify_resource(*client, ep, "q", resource("a"), o), PipelineError);

    o.parse_policy = ParsePolicy::retry;
    const auto retried = try_classify(*client, ep, "q", resource("a"), o);
    EXPECT_EQ(retried.label, RelevanceLabel::relevant);
    EXPECT_EQ(retried.calls, 2);
}

TEST(Classify, UsesVariantAndDecodeOverride) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("cls");
    std::vector<std::string> prompts;
    client->register_backend("cls", callback([&](const CompletionRequest& r) {
        prompts.push_back(r.messages.back().content);
        return std::string("irrelevant");
    }));
    PipelineOptions o;
    o.variant = PromptVariant::task1_extended;
    EXPECT_EQ(classify_resource(*client, ep, "q", resource("a"), o), RelevanceLabel::irrelevant);
    EXPECT_NE(prompts.back().find(kOneWordInstruction), std::string::npos);
    EXPECT_EQ(client->manifest().back().params["max_tokens"], 512);
    EXPECT_EQ(client->manifest().back().params["temperature"], 0.0);
}

TEST(Classify, TransportErrorsNameTheResource) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("cls");
    ep.max_retries = 0;
    client->register_backend("cls", callback([](const CompletionRequest&) -> std::string {
        throw TransportError("boom", false);
    }));
    try {
        classify_resource(*client, ep, "my query", resource("res-9"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("res-9"), std::string::npos);
    }
}

TEST(Retrieval, KeepsRecordOrderAndCountsUnparseable) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("cls");
    client->register_backend("cls", callback([](const CompletionRequest& r) {
        const auto id = test::task1_query_and_id(r).second;
        if (id == "c") return std::string("no idea");
        return std::string(id == "b" || id == "d" ? "relevant" : "irrelevant");
    }));
    PatientRecord rec{"p1", {resource("a"), resource("b"), resource("c"), resource("d")}};
    const auto got = retrieve_relevant(*client, ep, "q", rec);
    ASSERT_EQ(got.relevant.size(), 2u);
    EXPECT_EQ(got.relevant[0].resource_id, "b");
    EXPECT_EQ(got.relevant[1].resource_id, "d");
    EXPECT_EQ(got.unparseable, 1u);
    EXPECT_EQ(got.raw.size(), 4u);
    EXPECT_EQ(got.raw[2], "no idea");

    EXPECT_THROW(retrieve_relevant(*client, ep, "q", PatientRecord{"p1", {}}), PipelineError);
    EXPECT_THROW(retrieve_relevant(*client, ep, "q", PatientRecord{"p1", {resource("c")}}), PipelineError);
}

TEST(Answer, FallbackPolicies) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("ans");
    std::string seen;
    client->register_backend("ans", callback([&](const CompletionRequest& r) {
        seen = r.messages.back().content;
        return std::string("  An answer.  ");
    }));
    PipelineOptions o;
    const auto refused = answer_query(*client, ep, "q", {}, o);
    EXPECT_EQ(refused.answer, kInsufficientInformationAnswer);
    EXPECT_TRUE(refused.raw.empty());
    EXPECT_EQ(client->upstream_calls(), 0u);

    o.fallback = FallbackPolicy::answer_anyway;
    const auto anyway = answer_query(*client, ep, "q", {}, o);
    EXPECT_EQ(anyway.answer, "An answer.");
    EXPECT_NE(seen.find("'Resources': []"), std::string::npos);
}

TEST(Answer, BlankRepliesResampledOnce) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("ans");
    std::vector<std::size_t> samples;
    client->register_backend("ans", callback([&](const CompletionRequest& r) {
        samples.push_back(r.sample);
        return std::string(" \n ");
    }));
    const std::vector<CompactResource> rs{resource("a")};
    EXPECT_THROW(answer_query(*client, ep, "q", rs), PipelineError);
    EXPECT_EQ(samples, (std::vector<std::size_t>{0, 1}));
}

TEST(EndToEnd, AnswersFromRetrievedResources) {
    auto client = test::fast_client();
    auto cls = test::mock_endpoint("cls");
    auto ans = test::mock_endpoint("ans");
    client->register_backend("cls", callback([](const CompletionRequest& r) {
        return std::string(test::task1_query_and_id(r).second == "b" ? "Relevant" : "Irrelevant");
    }));
    std::string answer_prompt;
    client->register_backend("ans", callback([&](const CompletionRequest& r) {
        answer_prompt = r.messages.back().content;
        return std::string("Your condition b.");
    }));
    PatientRecord rec{"p1", {resource("a"), resource("b"), resource("c")}};
    const auto out = run_end_to_end(*client, cls, ans, "What is b?", rec);
    EXPECT_EQ(out.used_resources, std::vector<std::string>{"b"});
    EXPECT_EQ(out.answer, "Your condition b.");
    EXPECT_EQ(out.stage1_raw.size(), 3u);
    EXPECT_NE(answer_prompt.find("\"id\":\"b\""), std::string::npos);
    EXPECT_EQ(answer_prompt.find("\"id\":\"a\""), std::string::npos);
    const auto j = to_json(out);
    EXPECT_EQ(j["used_resources"], Json::array({"b"}));

    client->register_backend("cls", callback([](const CompletionRequest&) { return std::string("irrelevant"); }));
    const auto none = run_end_to_end(*client, cls, ans, "What is z?", rec);
    EXPECT_TRUE(none.used_resources.empty());
    EXPECT_EQ(none.answer, kInsufficientInformationAnswer);
}

TEST(EvaluateTask1, OracleMockIsPerfect) {
    const auto data = test::scripted_task1(test::synthetic_records(3)).examples;
    std::map<std::string, RelevanceLabel> gold;
    for (const auto& ex : data) gold[test::oracle_key(ex.query, ex.resource.resource_id)] = ex.relevance;
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("oracle");
    client->register_backend("oracle", callback([&](const CompletionRequest& r) {
        const auto [q, id] = test::task1_query_and_id(r);
        return std::string(to_string(gold.at(test::oracle_key(q, id))));
    }));
    const auto ev = evaluate_task1(*client, ep, data);
    EXPECT_DOUBLE_EQ(ev.report.f1, 1.0);
    EXPECT_DOUBLE_EQ(ev.report.accuracy, 1.0);
    EXPECT_EQ(ev.predictions.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(ev.predictions[i].example_id, i);
}

TEST(EvaluateTask1, AlwaysRelevantGivesPrevalencePrecision) {
    std::vector<Task1Example> data;
    for (int i = 0; i < 250; ++i) {
        data.push_back(Task1Example{resource("r" + std::to_string(i)), "q",
                                    i < 34 ? RelevanceLabel::relevant : RelevanceLabel::irrelevant, "p1", ""});
    }
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("yes");
    client->register_backend("yes", callback([](const CompletionRequest&) { return std::string("relevant"); }));
    const auto ev = evaluate_task1(*client, ep, data);
    EXPECT_EQ(ev.report.recall, 1.0);
    EXPECT_EQ(ev.report.precision, 34.0 / 250.0);
    EXPECT_EQ(ev.report.counts, (ConfusionCounts{34, 216, 0, 0}));
}

TEST(EvaluateTask1, UnparseableCountsAgainstTheModel) {
    std::vector<Task1Example> data{{resource("a"), "q", RelevanceLabel::relevant, "p1", ""},
                                   {resource("b"), "q", RelevanceLabel::irrelevant, "p1", ""},
                                   {resource("c"), "q", RelevanceLabel::relevant, "p1", ""}};
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("m");
    client->register_backend("m", callback([](const CompletionRequest& r) {
        return std::string(test::task1_query_and_id(r).second == "c" ? "relevant" : "unsure");
    }));
    const auto ev = evaluate_task1(*client, ep, data);
    EXPECT_EQ(ev.unparseable, 2u);
    EXPECT_EQ(ev.report.counts, (ConfusionCounts{1, 1, 1, 0}));
    EXPECT_EQ(to_json(ev.predictions[0])["predicted"], "unparseable");
    EXPECT_EQ(to_json(ev.predictions[2])["predicted"], "relevant");
}

TEST(EvaluateTask2, VerbatimAnswersScoreAsSelfComparison) {
    std::vector<Task2Example> data{
        {"What is my blood pressure?", {resource("a")}, "Your blood pressure was 120 over 80 on June 3.", "p1"},
        {"Am I allergic?", {resource("b")}, "Yes, you are allergic to penicillin.", "p1"},
        {"Shots?", {resource("c")}, "Flu", "p1"}};
    std::map<std::string, std::string> refs;
    for (const auto& d : data) refs[d.query] = d.answer;
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("echo");
    client->register_backend("echo", callback([&](const CompletionRequest& r) { return refs.at(test::task2_query(r)); }));
    const auto ev = evaluate_task2(*client, ep, data);
    ASSERT_EQ(ev.report.per_example.size(), data.size());
    double sum = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double self = meteor(data[i].answer, data[i].answer);
        EXPECT_EQ(ev.report.per_example[i], self);
        EXPECT_EQ(ev.answers[i].meteor, self);
        EXPECT_EQ(ev.answers[i].candidate, data[i].answer);
        sum += self;
    }
    EXPECT_DOUBLE_EQ(ev.report.mean, sum / 3);
}

TEST(Predictions, JsonRoundTripAndCounting) {
    const std::vector<PredictionRow> rows{{0, RelevanceLabel::relevant, RelevanceLabel::relevant, "Relevant"},
                                          {1, RelevanceLabel::relevant, std::nullopt, "?"},
                                          {2, RelevanceLabel::irrelevant, std::nullopt, "?"},
                                          {3, RelevanceLabel::irrelevant, RelevanceLabel::irrelevant, "no"}};
    std::vector<PredictionRow> back;
    for (const auto& r : rows) back.push_back(prediction_row_from_json(to_json(r)));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].example_id, rows[i].example_id);
        EXPECT_EQ(back[i].gold, rows[i].gold);
        EXPECT_EQ(back[i].predicted, rows[i].predicted);
        EXPECT_EQ(back[i].raw, rows[i].raw);
    }
    EXPECT_EQ(count_predictions(back), (ConfusionCounts{1, 1, 1, 1}));
    EXPECT_THROW(prediction_row_from_json(Json{{"gold", "maybe"}}), SchemaError);
    EXPECT_THROW(prediction_row_from_json(Json{{"predicted", "relevant"}}), SchemaError);
}
