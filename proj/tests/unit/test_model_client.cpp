#include <gtest/gtest.h>

#include <thread>

#include "fhirqa/error.hpp"
#include "fhirqa/model_client.hpp"
#include "support.hpp"

using namespace fhirqa;

namespace {

const Messages kPrompt{{Role::user, "Is aspirin relevant?"}};

class FlakyBackend : public Backend {
public:
    FlakyBackend(int failures, bool transient) : failures_(failures), transient_(transient) {}
    std::string complete(const CompletionRequest&) override {
        ++calls;
        if (calls <= failures_) throw TransportError("boom", transient_, 503);
        return "ok";
    }
    int calls = 0;

private:
    int failures_;
    bool transient_;
};

}  // namespace

TEST(RequestHash, SampleZeroMatchesPlainRequest) {
    DecodeParams d;
    EXPECT_EQ(request_sha256(kPrompt, d), request_sha256(kPrompt, d, 0));
    EXPECT_NE(request_sha256(kPrompt, d), request_sha256(kPrompt, d, 1));
    DecodeParams hot{0.7, 512, {}};
    EXPECT_NE(request_sha256(kPrompt, d), request_sha256(kPrompt, hot));
    EXPECT_NE(messages_sha256(kPrompt), request_sha256(kPrompt, d));
}

TEST(ModelClient, CacheHitAvoidsUpstreamCall) {
    auto client = test::fast_client();
    auto ep = test::mock_endpoint("e");
    int calls = 0;
    client->register_backend("e", std::make_shared<CallbackBackend>([&](const CompletionRequest&) {
        ++calls;
        return std::string("relevant");
    }));
    EXPECT_EQ(client->complete(ep, kPrompt), "relevant");
    EXPECT_EQ(client->complete(ep, kPrompt), "relevant");
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(client->upstream_calls(), 1u);
    const auto manifest = client->manifest();
    ASSERT_EQ(manifest.size(), 2u);
    EXPECT_EQ(manifest[0].attempts, 1);
    EXPECT_EQ(manifest[1].attempts, 0);
    EXPECT_EQ(manifest[0].call_id, "e/" + manifest[0].prompt_sha256);
    EXPECT_EQ(manifest[0].params["model"], "mock-e");
}

TEST(ModelClient, CacheIsKeyedByEndpointDecodeAndSample) {
    auto client = test::fast_client();
    int calls = 0;
    auto backend = std::make_shared<CallbackBackend>([&](const CompletionRequest& r) {
        ++calls;
        return r.endpoint.name + ":" + std::to_string(r.sample);
    });
    auto a = test::mock_endpoint("a");
    auto b = test::mock_endpoint("b");
    client->register_backend("a", backend);
    client->register_backend("b", backend);
    EXPECT_EQ(client->complete(a, kPrompt), "a:0");
    EXPECT_EQ(client->complete(b, kPrompt), "b:0");
    EXPECT_EQ(client->complete(a, kPrompt, CallOptions{std::nullopt, 1}), "a:1");
    EXPECT_EQ(client->complete(a, kPrompt, CallOptions{DecodeParams{0.9, 10, {}}, 0}), "a:0");
    EXPECT_EQ(calls, 4);
}

TEST(ModelClient, PersistentCacheResumesAcrossClients) {
    test::TempDir dir;
    auto ep = test::mock_endpoint("e");
    {
        auto client = test::fast_client(std::make_shared<ResponseCache>(dir / "cache/calls.jsonl"));
        client->register_backend("e", std::make_shared<CallbackBackend>([](const CompletionRequest&) { return std::string("first"); }));
        client->complete(ep, kPrompt);
    }
    auto cache = std::make_shared<ResponseCache>(dir / "cache/calls.jsonl");
    EXPECT_EQ(cache->size(), 1u);
    ClientOptions o;
    o.cache_mode = CacheMode::read_only;
    ModelClient client(o, cache);
    client.register_backend("e", std::make_shared<CallbackBackend>([](const CompletionRequest&) -> std::string {
        throw std::logic_error("must not be called");
    }));
    EXPECT_EQ(client.complete(ep, kPrompt), "first");
    EXPECT_THROW(client.complete(ep, {{Role::user, "other"}}), CacheMissError);
    EXPECT_EQ(client.upstream_calls(), 0u);
}

TEST(ModelClient, CacheOffAlwaysCalls) {
    ClientOptions o;
    o.cache_mode = CacheMode::off;
    ModelClient client(o, std::make_shared<ResponseCache>());
    int calls = 0;
    client.register_backend("e", std::make_shared<CallbackBackend>([&](const CompletionRequest&) { return std::to_string(++calls); }));
    auto ep = test::mock_endpoint("e");
    EXPECT_EQ(client.complete(ep, kPrompt), "1");
    EXPECT_EQ(client.complete(ep, kPrompt), "2");
}

TEST(ModelClient, RetriesTransientErrors) {
    auto client = test::fast_client();
    auto flaky = std::make_shared<FlakyBackend>(2, true);
    client->register_backend("e", flaky);
    auto ep = test::mock_endpoint("e");
    ep.max_retries = 3;
    EXPECT_EQ(client->complete(ep, kPrompt), "ok");
    EXPECT_EQ(flaky->calls, 3);
    EXPECT_EQ(client->manifest().back().attempts, 3);
}

TEST(ModelClient, GivesUpAfterRetryBudget) {
    auto client = test::fast_client();
    auto flaky = std::make_shared<FlakyBackend>(100, true);
    client->register_backend("e", flaky);
    auto ep = test::mock_endpoint("e");
    ep.max_retries = 2;
    try {
        client->complete(ep, kPrompt);
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos) << e.what();
        EXPECT_EQ(e.http_status(), 503);
    }
    EXPECT_EQ(flaky->calls, 3);
}

TEST(ModelClient, PermanentErrorsAreNotRetried) {
    auto client = test::fast_client();
    auto flaky = std::make_shared<FlakyBackend>(100, false);
    client->register_backend("e", flaky);
    EXPECT_THROW(client->complete(test::mock_endpoint("e"), kPrompt), TransportError);
    EXPECT_EQ(flaky->calls, 1);
}

TEST(ModelClient, RejectsEmptyMessagesAndUnknownBackends) {
    auto client = test::fast_client();
    EXPECT_THROW(client->complete(test::mock_endpoint("e"), {{Role::user, ""}}), ValidationError);
    EndpointConfig ep = test::mock_endpoint("nothing");
    ep.base_url = "ftp://x";
    EXPECT_THROW(client->complete(ep, kPrompt), ValidationError);
}

TEST(ModelClient, InFlightLimitIsRespected) {
    auto client = test::fast_client();
    std::atomic<int> active{0}, peak{0};
    client->register_backend("e", std::make_shared<CallbackBackend>([&](const CompletionRequest& r) {
        const int now = ++active;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --active;
        return r.prompt_sha256;
    }));
    auto ep = test::mock_endpoint("e", 2);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] { client->complete(ep, {{Role::user, "prompt " + std::to_string(t)}}); });
    }
    threads.clear();
    EXPECT_LE(peak.load(), 2);
    EXPECT_EQ(client->upstream_calls(), 8u);
}

TEST(MockBackend, ResolutionOrder) {
    auto mock = MockBackend()
                    .exact(messages_sha256(kPrompt), "from-exact")
                    .rule("aspirin (\\w+)", "rule:$1")
                    .fallback("from-default");
    EXPECT_EQ(mock.resolve(kPrompt, ""), "from-exact");
    EXPECT_EQ(mock.resolve({{Role::user, "take aspirin daily"}}, ""), "rule:daily");
    EXPECT_EQ(mock.resolve({{Role::user, "nothing"}}, ""), "from-default");
    EXPECT_EQ(MockBackend().exact("abc", "by-request").resolve(kPrompt, "abc"), "by-request");
    EXPECT_FALSE(MockBackend().resolve(kPrompt, ""));
}

TEST(MockBackend, LoadedFromScriptViaBaseUrl) {
    test::TempDir dir;
    write_file(dir / "script.json",
               Json{{"exact", Json::object()}, {"rules", Json::array({Json{{"pattern", "relevant"}, {"response", "relevant"}}})}}.dump());
    auto client = test::fast_client();
    EndpointConfig ep = test::mock_endpoint("m");
    ep.base_url = "mock:" + (dir / "script.json").string();
    EXPECT_EQ(client->complete(ep, kPrompt), "relevant");
    EXPECT_THROW(client->complete(ep, {{Role::user, "x"}}), TransportError);
    EXPECT_THROW(MockBackend::from_json(Json::parse(R"({"rules":[{"pattern":"(","response":"x"}]})")), SchemaError);
    EXPECT_THROW(MockBackend::from_json(Json::array()), SchemaError);
}

TEST(ResponseCache, FirstEntryWins) {
    test::TempDir dir;
    ResponseCache cache(dir / "c.jsonl");
    ManifestEntry e{"e/x", "x", "e", Json::object(), "one", 1, "t"};
    cache.append(e);
    e.raw_response = "two";
    cache.append(e);
    EXPECT_EQ(cache.find("e", "x")->raw_response, "one");
    EXPECT_FALSE(cache.find("other", "x"));
    EXPECT_EQ(read_json_lines(dir / "c.jsonl").size(), 1u);
    EXPECT_EQ(manifest_entry_from_json(to_json(e)), e);
}
