#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "fhirqa/dataset.hpp"
#include "fhirqa/error.hpp"
#include "support.hpp"

using namespace fhirqa;

namespace {

ResourceBatch small_batch(std::size_t n = 3) {
    ResourceBatch b{"p1", 0, {}};
    for (std::size_t i = 0; i < n; ++i) {
        CompactResource r;
        r.resource_type = ResourceType::Observation;
        r.resource_id = "o" + std::to_string(i);
        r.patient_id = "p1";
        r.body = Json{{"status", "final"}};
        r.label = make_resource_label(r);
        b.resources.push_back(r);
    }
    return b;
}

Json element(const std::string& resource, const std::string& query, const std::string& relevance,
             const std::string& label = "") {
    return Json{{"resource", resource}, {"query", query}, {"relevance", relevance}, {"patient_id", "p1"},
                {"resource_label", label}};
}

}  // namespace

TEST(SampleBatches, ShapeAndDeterminism) {
    const auto records = test::synthetic_records(3);
    for (const auto& rec : records) {
        const auto a = sample_batches(rec, 10, 10, 42);
        const auto b = sample_batches(rec, 10, 10, 42);
        ASSERT_EQ(a.size(), 10u);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].batch_index, i);
            ASSERT_EQ(a[i].resources.size(), 10u);
            std::set<std::string> ids;
            for (const auto& r : a[i].resources) ids.insert(r.resource_id);
            EXPECT_EQ(ids.size(), 10u) << "resources repeat within a batch";
            EXPECT_EQ(a[i].resources, b[i].resources);
        }
        EXPECT_NE(sample_batches(rec, 10, 10, 43)[0].resources, a[0].resources);
    }
}

TEST(SampleBatches, TooFewResources) {
    PatientRecord rec{"p", small_batch(5).resources};
    EXPECT_TRUE(sample_batches(rec, 10, 10, 1).empty());
    EXPECT_EQ(sample_batches(rec, 2, 5, 1).size(), 2u);
    EXPECT_THROW(sample_batches(rec, 1, 0, 1), ValidationError);
}

TEST(ParseTask1Reply, MatchesByIdInAnyOrder) {
    const auto batch = small_batch();
    Json arr = Json::array({element("o2", "When?", "irrelevant"), element("o0", "When?", "relevant", "Obs label"),
                            element("o1", " When? ", "Irrelevant")});
    const auto out = parse_task1_reply(batch, "Sure!\n```json\n" + arr.dump() + "\n```");
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].resource.resource_id, "o0");
    EXPECT_EQ(out[0].relevance, RelevanceLabel::relevant);
    EXPECT_EQ(out[0].resource_label, "Obs label");
    EXPECT_EQ(out[1].resource_label, batch.resources[1].label);
    EXPECT_EQ(out[2].relevance, RelevanceLabel::irrelevant);
    for (const auto& ex : out) {
        EXPECT_EQ(ex.query, "When?");
        EXPECT_EQ(ex.patient_id, "p1");
    }
}

TEST(ParseTask1Reply, FallsBackToPosition) {
    const auto batch = small_batch();
    Json arr = Json::array({element("", "Q", "relevant"), element("", "Q", "irrelevant"), element("", "Q", "irrelevant")});
    const auto out = parse_task1_reply(batch, arr.dump());
    EXPECT_EQ(out[0].resource.resource_id, "o0");
    EXPECT_EQ(out[0].relevance, RelevanceLabel::relevant);
}

TEST(ParseTask1Reply, AcceptsObjectAndStringifiedResources) {
    const auto batch = small_batch(2);
    Json arr = Json::array({Json{{"resource", Json{{"id", "o1"}}}, {"query", "Q"}, {"relevance", "relevant"}},
                            Json{{"resource", R"({"resourceType":"Observation","id":"o0"})"}, {"query", "Q"}, {"relevance", "irrelevant"}}});
    const auto out = parse_task1_reply(batch, arr.dump());
    EXPECT_EQ(out[1].relevance, RelevanceLabel::relevant);
    EXPECT_EQ(out[0].relevance, RelevanceLabel::irrelevant);
}

TEST(ParseTask1Reply, RejectsInvalidReplies) {
    const auto batch = small_batch();
    auto reply = [](std::initializer_list<Json> els) { return Json(els).dump(); };
    // wrong count
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", "Q", "relevant")})), ValidationError);
    // two queries
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", "Q", "relevant"), element("o1", "R", "irrelevant"),
                                                 element("o2", "Q", "irrelevant")})),
                 ValidationError);
    // no relevant
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", "Q", "irrelevant"), element("o1", "Q", "irrelevant"),
                                                 element("o2", "Q", "irrelevant")})),
                 ValidationError);
    // bad label
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", "Q", "maybe"), element("o1", "Q", "relevant"),
                                                 element("o2", "Q", "irrelevant")})),
                 ValidationError);
    // duplicate resource
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", "Q", "relevant"), element("o0", "Q", "irrelevant"),
                                                 element("o2", "Q", "irrelevant")})),
                 ValidationError);
    // empty query
    EXPECT_THROW(parse_task1_reply(batch, reply({element("o0", " ", "relevant"), element("o1", " ", "irrelevant"),
                                                 element("o2", " ", "irrelevant")})),
                 ValidationError);
    EXPECT_THROW(parse_task1_reply(batch, "no json here"), ValidationError);
    EXPECT_THROW(parse_task1_reply(batch, "[1, 2"), ValidationError);
    EXPECT_THROW(parse_task1_reply(batch, "[1, 2, 3]"), ValidationError);
}

TEST(GenerateTask1Batch, ResamplesThenSucceeds) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("gen");
    std::vector<std::size_t> samples;
    client->register_backend("gen", std::make_shared<CallbackBackend>([&](const CompletionRequest& r) {
        samples.push_back(r.sample);
        return r.sample < 2 ? std::string("garbage") : test::scripted_generator_reply(r);
    }));
    const auto out = generate_task1_batch(small_batch(4), *client, ep);
    EXPECT_EQ(out.size(), 4u);
    EXPECT_EQ(samples, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(client->manifest().front().params["temperature"], 0.7);
}

TEST(GenerateTask1Batch, BudgetExhaustedCarriesLastReply) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("gen");
    client->register_backend("gen", std::make_shared<CallbackBackend>([](const CompletionRequest&) { return std::string("nope"); }));
    try {
        generate_task1_batch(small_batch(), *client, ep);
        FAIL();
    } catch (const BatchGenerationError& e) {
        EXPECT_EQ(e.last_raw(), "nope");
    }
}

TEST(BuildTask1, CountsAndBatchInvariants) {
    const auto records = test::synthetic_records(6);
    const auto result = test::scripted_task1(records);
    EXPECT_EQ(result.examples.size(), 600u);
    EXPECT_EQ(result.batches, 60u);
    EXPECT_TRUE(result.quarantine.empty());
    for (std::size_t b = 0; b < 60; ++b) {
        std::set<std::string> queries;
        int relevant = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            const auto& ex = result.examples[b * 10 + i];
            queries.insert(ex.query);
            relevant += ex.relevance == RelevanceLabel::relevant;
        }
        EXPECT_EQ(queries.size(), 1u);
        EXPECT_GE(relevant, 1);
    }
}

TEST(BuildTask1, SkipsSmallRecordsAndHonoursFailurePolicy) {
    auto records = test::synthetic_records(3);
    records.push_back(PatientRecord{"tiny", small_batch(4).resources});
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("gen");
    const std::string doomed = records[1].patient_id;
    client->register_backend("gen", std::make_shared<CallbackBackend>([&](const CompletionRequest& r) {
        if (test::datagen_patient(r) == doomed) return std::string("[]");
        return test::scripted_generator_reply(r);
    }));
    GenerationOptions o;
    o.on_failure = FailurePolicy::quarantine;
    const auto result = build_task1_dataset(records, *client, ep, o);
    EXPECT_EQ(result.skipped_patients, std::vector<std::string>{"tiny"});
    EXPECT_EQ(result.quarantine.size(), 10u);
    EXPECT_EQ(result.quarantine[0].patient_id, doomed);
    EXPECT_EQ(result.quarantine[0].last_raw, "[]");
    EXPECT_EQ(result.examples.size(), 200u);
    EXPECT_EQ(summary_json(result)["quarantined"], 10);

    o.on_failure = FailurePolicy::abort;
    EXPECT_THROW(build_task1_dataset(records, *client, ep, o), BatchGenerationError);
    EXPECT_THROW(build_task1_dataset({}, *client, ep, o), ValidationError);
}

TEST(BuildTask1, SameSeedSameBytes) {
    const auto records = test::synthetic_records(4);
    const auto a = test::scripted_task1(records, 5);
    const auto b = test::scripted_task1(records, 5);
    const auto c = test::scripted_task1(records, 6);
    EXPECT_EQ(a.examples, b.examples);
    EXPECT_NE(a.examples, c.examples);
}

TEST(Task1Json, RoundTrip) {
    test::TempDir dir;
    const auto result = test::scripted_task1(test::synthetic_records(2));
    write_json_lines(dir / "t1.jsonl", to_json_rows(result.examples));
    EXPECT_EQ(read_task1_dataset(dir / "t1.jsonl"), result.examples);
    const auto row = to_json(result.examples[0]);
    for (const char* k : {"resource", "query", "relevance", "patient_id", "resource_label"}) EXPECT_TRUE(row.contains(k)) << k;
    write_file(dir / "bad.jsonl", R"({"query":"q"})");
    EXPECT_THROW(read_task1_dataset(dir / "bad.jsonl"), SchemaError);
}

TEST(DeriveTask2, OneInputPerPatientQuery) {
    const auto result = test::scripted_task1(test::synthetic_records(5));
    const auto d = derive_task2_inputs(result.examples);
    std::set<std::pair<std::string, std::string>> groups;
    for (const auto& ex : result.examples) groups.insert({ex.patient_id, ex.query});
    EXPECT_EQ(d.inputs.size() + d.excluded_groups, groups.size());
    EXPECT_EQ(d.excluded_groups, 0u);
    for (const auto& in : d.inputs) {
        EXPECT_FALSE(in.relevant_resources.empty());
        for (const auto& r : in.relevant_resources) {
            const auto it = std::find_if(result.examples.begin(), result.examples.end(), [&](const Task1Example& e) {
                return e.query == in.query && e.patient_id == in.patient_id && e.resource.resource_id == r.resource_id;
            });
            ASSERT_NE(it, result.examples.end());
            EXPECT_EQ(it->relevance, RelevanceLabel::relevant);
        }
    }
}

TEST(DeriveTask2, GroupsWithoutRelevantAreExcluded) {
    auto batch = small_batch(2);
    std::vector<Task1Example> rows{{batch.resources[0], "Q", RelevanceLabel::irrelevant, "p1", "l"},
                                   {batch.resources[1], "Q", RelevanceLabel::irrelevant, "p1", "l"},
                                   {batch.resources[0], "R", RelevanceLabel::relevant, "p1", "l"}};
    const auto d = derive_task2_inputs(rows);
    ASSERT_EQ(d.inputs.size(), 1u);
    EXPECT_EQ(d.inputs[0].query, "R");
    EXPECT_EQ(d.excluded_groups, 1u);
}

TEST(Task2Answers, GeneratedAndTrimmed) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("ans");
    client->register_backend("ans", std::make_shared<CallbackBackend>([](const CompletionRequest& r) {
        if (r.sample == 0 && test::task2_query(r) == "retry me") return std::string("   ");
        return "  answer to " + test::task2_query(r) + "\n";
    }));
    const auto batch = small_batch(1);
    std::vector<Task2Input> inputs{{"first", batch.resources, "p1"}, {"retry me", batch.resources, "p1"}};
    const auto out = generate_task2_answers(inputs, *client, ep);
    ASSERT_EQ(out.examples.size(), 2u);
    EXPECT_EQ(out.examples[0].answer, "answer to first");
    EXPECT_EQ(out.examples[1].answer, "answer to retry me");
    EXPECT_EQ(client->manifest().front().params["max_tokens"], 1024);
}

TEST(Task2Answers, EmptyAfterBudgetQuarantined) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("ans");
    client->register_backend("ans", std::make_shared<CallbackBackend>([](const CompletionRequest&) { return std::string(""); }));
    const auto batch = small_batch(1);
    std::vector<Task2Input> inputs{{"q", batch.resources, "p1"}};
    GenerationOptions o;
    o.on_failure = FailurePolicy::quarantine;
    const auto out = generate_task2_answers(inputs, *client, ep, o);
    EXPECT_TRUE(out.examples.empty());
    ASSERT_EQ(out.quarantine.size(), 1u);
    EXPECT_EQ(out.quarantine[0].kind, "task2_answer");
    o.on_failure = FailurePolicy::abort;
    EXPECT_THROW(generate_task2_answers(inputs, *client, ep, o), BatchGenerationError);
}

TEST(Splits, UngroupedSizesAndPartition) {
    std::vector<int> items(5000);
    std::iota(items.begin(), items.end(), 0);
    const auto s = split(std::span<const int>(items), 0.02, 3);
    EXPECT_EQ(s.train.size(), 4900u);
    EXPECT_EQ(s.test.size(), 100u);
    std::vector<int> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, items);
    EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    EXPECT_EQ(split(std::span<const int>(items), 0.02, 3).test, s.test);
    EXPECT_NE(split(std::span<const int>(items), 0.02, 4).test, s.test);
}

TEST(Splits, GroupedKeepsQueriesTogether) {
    const auto result = test::scripted_task1(test::synthetic_records(10));
    const auto s = split_by_query(result.examples, 0.05, 9);
    EXPECT_EQ(s.train.size() + s.test.size(), result.examples.size());
    std::set<std::pair<std::string, std::string>> train_groups;
    for (const auto& e : s.train) train_groups.insert({e.patient_id, e.query});
    for (const auto& e : s.test) EXPECT_FALSE(train_groups.count({e.patient_id, e.query}));
}

TEST(Splits, RejectsBadArguments) {
    std::vector<int> items{1, 2, 3};
    EXPECT_THROW(split(std::span<const int>(items), 0.0, 1), ValidationError);
    EXPECT_THROW(split(std::span<const int>(items), 1.0, 1), ValidationError);
    std::vector<int> one{1};
    EXPECT_THROW(split(std::span<const int>(one), 0.5, 1), ValidationError);
}

TEST(Subsample, SubsetInInputOrder) {
    std::vector<int> items(4900);
    std::iota(items.begin(), items.end(), 0);
    const auto sub = subsample(std::span<const int>(items), 500, 2);
    EXPECT_EQ(sub.size(), 500u);
    EXPECT_TRUE(std::is_sorted(sub.begin(), sub.end()));
    EXPECT_EQ(std::set<int>(sub.begin(), sub.end()).size(), 500u);
    EXPECT_EQ(subsample(std::span<const int>(items), 500, 2), sub);
    EXPECT_THROW(subsample(std::span<const int>(items), 4901, 2), ValidationError);
}
