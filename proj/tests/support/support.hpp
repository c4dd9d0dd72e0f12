#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fhirqa/dataset.hpp"
#include "fhirqa/fhir.hpp"
#include "fhirqa/hashing.hpp"
#include "fhirqa/judge.hpp"
#include "fhirqa/model_client.hpp"
#include "fhirqa/synthetic.hpp"

namespace fhirqa::test {

/// Directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fhirqa_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return FHIRQA_TEST_DATA_DIR; }

inline EndpointConfig mock_endpoint(std::string name, std::size_t in_flight = 4) {
    EndpointConfig e;
    e.name = std::move(name);
    e.base_url = "callback";
    e.model_id = "mock-" + e.name;
    e.max_in_flight = in_flight;
    return e;
}

/// Client with no backoff delay and an in-memory cache.
inline std::unique_ptr<ModelClient> fast_client(std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>()) {
    ClientOptions o;
    o.backoff_base = std::chrono::milliseconds(0);
    o.backoff_max = std::chrono::milliseconds(0);
    return std::make_unique<ModelClient>(o, std::move(cache));
}

/// Records from the synthetic generator, ingested in memory.
inline std::vector<PatientRecord> synthetic_records(std::size_t patients, std::uint64_t seed = 7) {
    SyntheticCorpusOptions o;
    o.patients = patients;
    o.seed = seed;
    std::vector<PatientRecord> out;
    CorpusSummary summary;
    for (std::size_t i = 0; i < patients; ++i) {
        out.push_back(ingest_bundle(synthetic_bundle(i, o), RetentionRuleset::default_rules(),
                                    "patient_" + std::to_string(i), summary));
    }
    return out;
}

inline std::string between(const std::string& text, const std::string& open, const std::string& close) {
    const auto a = text.find(open);
    if (a == std::string::npos) return {};
    const auto b = text.find(close, a + open.size());
    if (b == std::string::npos) return {};
    return text.substr(a + open.size(), b - a - open.size());
}

/// The resource array embedded in a query-generation prompt.
inline Json datagen_resources(const CompletionRequest& req) {
    return Json::parse(between(req.messages.back().content, "given FHIR resources: ", ". The relevance should"));
}

inline std::string datagen_patient(const CompletionRequest& req) {
    return between(req.messages.back().content, "\"patient_id\": \"", "\"");
}

/// A well-behaved query generator: one query per batch naming the batch's
/// relevant resources, chosen from a hash of the prompt, in a JSON array
/// wrapped in prose.
inline std::string scripted_generator_reply(const CompletionRequest& req) {
    const Json resources = datagen_resources(req);
    const std::string patient = datagen_patient(req);
    std::uint64_t h = fnv1a64(req.prompt_sha256);
    const std::size_t anchor = h % resources.size();
    const std::string query = "What does my " + resources[anchor]["resourceType"].get<std::string>() + " " +
                              resources[anchor]["id"].get<std::string>() + " record say about visit " +
                              req.prompt_sha256.substr(0, 6) + "?";
    Json out = Json::array();
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const bool relevant = i == anchor || ((h >> (i + 8)) & 7) == 0;
        out.push_back(Json{{"resource", resources[i]["id"]},
                           {"query", query},
                           {"relevance", relevant ? "relevant" : "irrelevant"},
                           {"patient_id", patient},
                           {"resource_label", ""}});
    }
    return "Here is the output:\n```json\n" + out.dump(2) + "\n```";
}

/// Query text embedded in a grounded-answer prompt.
inline std::string task2_query(const CompletionRequest& req) {
    return between(req.messages.back().content, "'Query': ", ", 'Resources': ");
}

inline std::string scripted_answer_reply(const CompletionRequest& req) {
    return "Based on your records: " + task2_query(req) + " The answer is in entry " +
           req.prompt_sha256.substr(0, 8) + ".";
}

/// (query, resource id) from a relevance prompt.
inline std::pair<std::string, std::string> task1_query_and_id(const CompletionRequest& req) {
    const std::string& user = req.messages.back().content;
    const std::string query = between(user, "QUERY:\n", "\n\nRESOURCE:\n");
    const Json resource = Json::parse(between(user, "RESOURCE:\n", "\n\nIs this resource"));
    return {query, resource.at("id").get<std::string>()};
}

inline std::string oracle_key(const std::string& query, const std::string& id) { return query + '\x1f' + id; }

/// Generates Task 1 data from `records` with the scripted generator.
inline Task1BuildResult scripted_task1(const std::vector<PatientRecord>& records, std::uint64_t seed = 11) {
    auto client = fast_client();
    auto endpoint = mock_endpoint("generator", 8);
    client->register_backend(endpoint.name, std::make_shared<CallbackBackend>(scripted_generator_reply));
    GenerationOptions o;
    o.seed = seed;
    return build_task1_dataset(records, *client, endpoint, o);
}

/// Judge that prefers the longer response regardless of where it is shown,
/// with TIE for equal lengths.
inline std::string length_judge_reply(const CompletionRequest& req) {
    const std::string& user = req.messages.back().content;
    const auto r1 = user.find("Response 1");
    const auto r2 = user.find("\n\nResponse 2");
    const auto tail = user.find("\n\nExplain your reasoning");
    const auto body1 = user.find(":\n", r1) + 2;
    const auto body2 = user.find(":\n", r2 + 2) + 2;
    const auto len1 = r2 - body1;
    const auto len2 = tail - body2;
    const char* pick = len1 > len2 ? "1" : len2 > len1 ? "2" : "TIE";
    return std::string("Both are reasonable.\nWINNER: ") + pick;
}

}  // namespace fhirqa::test
