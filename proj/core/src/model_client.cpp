#include "fhirqa/model_client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fhirqa/clock.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/hashing.hpp"

namespace fhirqa {
namespace {

Json call_params(const EndpointConfig& endpoint, std::size_t sample) {
    Json p = to_json(endpoint.decode);
    p["model"] = endpoint.model_id;
    if (sample > 0) p["sample"] = sample;
    return p;
}

}  // namespace

struct ModelClient::Limiter {
    explicit Limiter(std::size_t limit) : available(limit) {}

    void acquire() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mu);
            ++available;
        }
        cv.notify_one();
    }

    std::mutex mu;
    std::condition_variable cv;
    std::size_t available;
};

std::string messages_sha256(const Messages& messages) { return sha256_hex(to_line(to_json(messages))); }

std::string request_sha256(const Messages& messages, const DecodeParams& decode, std::size_t sample) {
    Json material{{"messages", to_json(messages)}, {"decode", to_json(decode)}};
    if (sample > 0) material["sample"] = sample;
    return sha256_hex(to_line(material));
}

ModelClient::ModelClient(ClientOptions options, std::shared_ptr<ResponseCache> cache)
    : options_(options), cache_(std::move(cache)) {}

ModelClient::~ModelClient() = default;

void ModelClient::register_backend(const std::string& endpoint_name, std::shared_ptr<Backend> backend) {
    std::lock_guard lock(mu_);
    by_name_.insert_or_assign(endpoint_name, std::move(backend));
}

Backend& ModelClient::backend_for(const EndpointConfig& endpoint) {
    std::lock_guard lock(mu_);
    if (auto it = by_name_.find(endpoint.name); it != by_name_.end()) return *it->second;
    const auto& url = endpoint.base_url;
    if (url.starts_with("mock:")) {
        const std::string path = url.substr(5);
        auto it = mocks_by_path_.find(path);
        if (it == mocks_by_path_.end()) {
            it = mocks_by_path_.emplace(path, std::make_shared<MockBackend>(MockBackend::load(path))).first;
        }
        return *it->second;
    }
    if (url.starts_with("http://") || url.starts_with("https://")) {
        if (!http_) http_ = std::make_shared<HttpBackend>();
        return *http_;
    }
    throw ValidationError("endpoint " + endpoint.name + ": no backend for base_url \"" + url + "\"");
}

ModelClient::Limiter& ModelClient::limiter_for(const EndpointConfig& endpoint) {
    std::lock_guard lock(mu_);
    auto& slot = limiters_[endpoint.name];
    if (!slot) slot = std::make_unique<Limiter>(std::max<std::size_t>(1, endpoint.max_in_flight));
    return *slot;
}

std::string ModelClient::complete(const EndpointConfig& base_endpoint, const Messages& messages,
                                  const CallOptions& options) {
    for (const auto& m : messages) {
        if (m.role != Role::assistant && m.content.empty()) {
            throw ValidationError("empty " + std::string(to_string(m.role)) + " message");
        }
    }
    const EndpointConfig endpoint = options.decode ? base_endpoint.with_decode(*options.decode) : base_endpoint;
    const std::string sha = request_sha256(messages, endpoint.decode, options.sample);

    auto record = [&](ManifestEntry entry) {
        std::lock_guard lock(manifest_mu_);
        manifest_.push_back(std::move(entry));
    };

    if (cache_ && options_.cache_mode != CacheMode::off) {
        if (auto hit = cache_->find(endpoint.name, sha)) {
            ManifestEntry entry = *hit;
            entry.attempts = 0;
            record(entry);
            return hit->raw_response;
        }
        if (options_.cache_mode == CacheMode::read_only) {
            throw CacheMissError("cache miss for endpoint " + endpoint.name + " prompt " + sha);
        }
    }

    Backend& backend = backend_for(endpoint);
    Limiter& limiter = limiter_for(endpoint);
    const CompletionRequest request{endpoint, messages, sha, options.sample};

    std::string response;
    int attempts = 0;
    for (;;) {
        ++attempts;
        limiter.acquire();
        try {
            response = backend.complete(request);
            limiter.release();
            break;
        } catch (const TransportError& e) {
            limiter.release();
            if (!e.transient() || attempts > endpoint.max_retries) {
                throw TransportError(e.what() + std::string(" (after ") + std::to_string(attempts) + " attempt" +
                                         (attempts == 1 ? "" : "s") + ")",
                                     e.transient(), e.http_status());
            }
        } catch (...) {
            limiter.release();
            throw;
        }
        const double scale = std::pow(options_.backoff_factor, attempts - 1);
        const auto delay = std::min<std::chrono::milliseconds>(
            options_.backoff_max,
            std::chrono::milliseconds(static_cast<long long>(options_.backoff_base.count() * scale)));
        std::this_thread::sleep_for(delay);
    }
    upstream_calls_.fetch_add(1);

    ManifestEntry entry{endpoint.name + "/" + sha, sha, endpoint.name, call_params(endpoint, options.sample),
                        response, attempts, utc_timestamp()};
    if (cache_ && options_.cache_mode == CacheMode::read_write) cache_->append(entry);
    record(std::move(entry));
    return response;
}

std::vector<ManifestEntry> ModelClient::manifest() const {
    std::lock_guard lock(manifest_mu_);
    return manifest_;
}

void ModelClient::clear_manifest() {
    std::lock_guard lock(manifest_mu_);
    manifest_.clear();
}

}  // namespace fhirqa
