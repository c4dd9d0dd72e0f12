#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fhirqa/endpoint.hpp"

namespace fhirqa {

// ---------------------------------------------------------------------------
// Manifest / cache

/// One upstream model call. The generation manifest and the response cache
/// share this schema.
struct ManifestEntry {
    std::string call_id;
    std::string prompt_sha256;
    std::string endpoint;
    Json params = Json::object();
    std::string raw_response;
    int attempts = 1;
    std::string timestamp;

    bool operator==(const ManifestEntry&) const = default;
};

Json to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const Json& j);

/// Content-addressed response store keyed by (endpoint name, prompt hash).
///
/// When backed by a file, existing entries are loaded on construction and new
/// entries are appended and flushed one line at a time, so an interrupted run
/// keeps every completed call. Lookups may run concurrently; appends are
/// serialized.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path path);

    std::optional<ManifestEntry> find(std::string_view endpoint, std::string_view prompt_sha256) const;
    /// First entry for a key wins; later duplicates are ignored.
    void append(const ManifestEntry& entry);
    std::size_t size() const;
    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    static std::string key(std::string_view endpoint, std::string_view sha);

    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, ManifestEntry> entries_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Backends

struct CompletionRequest {
    const EndpointConfig& endpoint;
    const Messages& messages;
    std::string prompt_sha256;
    std::size_t sample = 0;
};

/// Transport to a model. Throws TransportError; transient() failures are retried.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Chat-completions over HTTP(S):
/// POST {base_url}/chat/completions {model, messages, temperature, max_tokens[, stop]}
/// and reads choices[0].message.content.
class HttpBackend final : public Backend {
public:
    HttpBackend();
    std::string complete(const CompletionRequest& request) override;

    static Json request_body(const CompletionRequest& request);
    /// Throws TransportError (non-transient) when the reply has no message content.
    static std::string parse_response(std::string_view body);
};

/// Mock script: {"exact": {sha256: response}, "rules": [{"pattern": regex, "response": s}], "default": s}.
///
/// Resolution order: exact hash (of the messages, or the full request key),
/// then the first rule whose ECMAScript regex matches the prompt text, then
/// the default. Rule responses may reference capture groups ($1, $2, ...).
class MockBackend final : public Backend {
public:
    struct Rule {
        std::string pattern;
        std::regex regex;
        std::string response;
    };

    MockBackend() = default;
    static MockBackend from_json(const Json& script);
    static MockBackend load(const std::filesystem::path& path);

    MockBackend& exact(std::string sha256, std::string response);
    MockBackend& rule(const std::string& pattern, std::string response);
    MockBackend& fallback(std::string response);

    std::string complete(const CompletionRequest& request) override;
    std::optional<std::string> resolve(const Messages& messages, std::string_view request_sha) const;

private:
    std::map<std::string, std::string, std::less<>> exact_;
    std::vector<Rule> rules_;
    std::optional<std::string> default_;
};

/// In-process backend driven by a function; for tests and embedding.
class CallbackBackend final : public Backend {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const CompletionRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

// ---------------------------------------------------------------------------
// Client

/// sha256 of the canonical messages array alone; the key used by mock "exact" scripts.
std::string messages_sha256(const Messages& messages);

/// sha256 of {messages, decode[, sample]}; sample is only included when > 0 so
/// first attempts hash identically to a plain (messages, decode) request.
std::string request_sha256(const Messages& messages, const DecodeParams& decode, std::size_t sample = 0);

enum class CacheMode { off, read_write, read_only };

struct ClientOptions {
    CacheMode cache_mode = CacheMode::read_write;
    std::chrono::milliseconds backoff_base{250};
    double backoff_factor = 2.0;
    std::chrono::milliseconds backoff_max{8'000};
};

struct CallOptions {
    /// Replaces the endpoint's decode parameters for this call.
    std::optional<DecodeParams> decode;
    /// Distinguishes deliberate re-samples of the same prompt (validation
    /// retries) so each gets its own cache slot.
    std::size_t sample = 0;
};

/// Uniform completion entry point over all backends, with caching, transient
/// retry with exponential backoff and a per-endpoint in-flight limit.
class ModelClient {
public:
    explicit ModelClient(ClientOptions options = {}, std::shared_ptr<ResponseCache> cache = nullptr);
    ~ModelClient();
    ModelClient(const ModelClient&) = delete;
    ModelClient& operator=(const ModelClient&) = delete;

    /// Routes calls for `endpoint_name` to `backend` regardless of base_url.
    void register_backend(const std::string& endpoint_name, std::shared_ptr<Backend> backend);

    /// Returns the assistant text. Throws TransportError after the retry
    /// budget, CacheMissError in read-only mode, ValidationError for an empty
    /// user/system message.
    std::string complete(const EndpointConfig& endpoint, const Messages& messages, const CallOptions& options = {});

    /// Every call made through this client since construction or the last
    /// clear, cache hits included (their attempts field is 0).
    std::vector<ManifestEntry> manifest() const;
    void clear_manifest();
    std::size_t upstream_calls() const { return upstream_calls_.load(); }
    const std::shared_ptr<ResponseCache>& cache() const { return cache_; }
    const ClientOptions& options() const { return options_; }

private:
    struct Limiter;

    Backend& backend_for(const EndpointConfig& endpoint);
    Limiter& limiter_for(const EndpointConfig& endpoint);

    ClientOptions options_;
    std::shared_ptr<ResponseCache> cache_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Backend>, std::less<>> by_name_;
    std::map<std::string, std::shared_ptr<Backend>, std::less<>> mocks_by_path_;
    std::shared_ptr<Backend> http_;
    std::map<std::string, std::unique_ptr<Limiter>, std::less<>> limiters_;
    mutable std::mutex manifest_mu_;
    std::vector<ManifestEntry> manifest_;
    std::atomic<std::size_t> upstream_calls_{0};
};

}  // namespace fhirqa
