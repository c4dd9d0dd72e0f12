#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "fhirqa/error.hpp"
#include "fhirqa/model_client.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace fhirqa;

namespace {

// Chat-completions stand-in: fails the first `failures` requests with 503.
class FakeServer {
public:
    explicit FakeServer(int failures = 0) : failures_(failures) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_body = Json::parse(req.body);
            last_auth = req.get_header_value("Authorization");
            if (++requests <= failures_) {
                res.status = 503;
                res.set_content("overloaded", "text/plain");
                return;
            }
            if (last_body["model"] == "bad-request") {
                res.status = 400;
                res.set_content("{\"error\":\"bad\"}", "application/json");
                return;
            }
            const std::string content = "echo:" + last_body["messages"].back()["content"].get<std::string>();
            res.set_content(Json{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", content}}}}})}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    EndpointConfig endpoint(const std::string& model = "fake-model") const {
        EndpointConfig e;
        e.name = "http";
        e.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
        e.model_id = model;
        e.timeout = std::chrono::milliseconds(5000);
        return e;
    }

    std::atomic<int> requests{0};
    Json last_body;
    std::string last_auth;

private:
    int failures_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(HttpBackend, RequestBodyShape) {
    EndpointConfig e;
    e.model_id = "m";
    e.decode = DecodeParams{0.3, 77, {"END"}};
    const Messages msgs{{Role::user, "hi"}};
    const auto body = HttpBackend::request_body(CompletionRequest{e, msgs, "", 0});
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["max_tokens"], 77);
    EXPECT_EQ(body["stop"], Json::array({"END"}));
    EXPECT_EQ(body["messages"][0]["role"], "user");
}

TEST(HttpBackend, ParseResponse) {
    EXPECT_EQ(HttpBackend::parse_response(R"({"choices":[{"message":{"content":"x"}}]})"), "x");
    EXPECT_THROW(HttpBackend::parse_response(R"({"choices":[]})"), TransportError);
    EXPECT_THROW(HttpBackend::parse_response("not json"), TransportError);
}

TEST(HttpBackend, RoundTripWithAuthHeader) {
    FakeServer server;
    ::setenv("FHIRQA_TEST_KEY", "sekret", 1);
    auto ep = server.endpoint();
    ep.api_key_env = "FHIRQA_TEST_KEY";
    auto client = test::fast_client();
    EXPECT_EQ(client->complete(ep, {{Role::user, "hello"}}), "echo:hello");
    EXPECT_EQ(server.last_auth, "Bearer sekret");
    EXPECT_EQ(server.last_body["model"], "fake-model");
}

TEST(HttpBackend, MissingKeyVariableIsPermanent) {
    FakeServer server;
    auto ep = server.endpoint();
    ep.api_key_env = "FHIRQA_TEST_UNSET_KEY";
    ::unsetenv("FHIRQA_TEST_UNSET_KEY");
    auto client = test::fast_client();
    EXPECT_THROW(client->complete(ep, {{Role::user, "hello"}}), TransportError);
    EXPECT_EQ(server.requests.load(), 0);
}

TEST(HttpBackend, RetriesServerErrors) {
    FakeServer server(2);
    auto client = test::fast_client();
    EXPECT_EQ(client->complete(server.endpoint(), {{Role::user, "again"}}), "echo:again");
    EXPECT_EQ(server.requests.load(), 3);
}

TEST(HttpBackend, ClientErrorsAreNotRetried) {
    FakeServer server;
    auto client = test::fast_client();
    try {
        client->complete(server.endpoint("bad-request"), {{Role::user, "x"}});
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.http_status(), 400);
        EXPECT_FALSE(e.transient());
    }
    EXPECT_EQ(server.requests.load(), 1);
}

TEST(HttpBackend, UnreachableHostIsTransportError) {
    EndpointConfig e;
    e.name = "down";
    e.base_url = "http://127.0.0.1:9/v1";
    e.max_retries = 1;
    e.timeout = std::chrono::milliseconds(500);
    auto client = test::fast_client();
    EXPECT_THROW(client->complete(e, {{Role::user, "x"}}), TransportError);
}
