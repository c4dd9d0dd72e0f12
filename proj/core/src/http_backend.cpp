#include <curl/curl.h>

#include <cstdlib>
#include <memory>

#include "fhirqa/error.hpp"
#include "fhirqa/model_client.hpp"

namespace fhirqa {
namespace {

std::size_t write_body(char* data, std::size_t size, std::size_t n, void* user) {
    static_cast<std::string*>(user)->append(data, size * n);
    return size * n;
}

struct CurlGlobal {
    CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
    ~CurlGlobal() { curl_global_cleanup(); }
};

}  // namespace

HttpBackend::HttpBackend() {
    static CurlGlobal global;
}

Json HttpBackend::request_body(const CompletionRequest& request) {
    const auto& decode = request.endpoint.decode;
    Json body{{"model", request.endpoint.model_id},
              {"messages", to_json(request.messages)},
              {"temperature", decode.temperature},
              {"max_tokens", decode.max_tokens}};
    if (!decode.stop.empty()) body["stop"] = decode.stop;
    return body;
}

std::string HttpBackend::parse_response(std::string_view body) {
    Json j;
    try {
        j = parse_json(body);
    } catch (const ParseError& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what(), false);
    }
    const Json* content = nullptr;
    if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const Json& choice = j["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content")) {
            content = &choice["message"]["content"];
        }
    }
    if (!content || !content->is_string()) {
        throw TransportError("completion response has no choices[0].message.content", false);
    }
    return content->get<std::string>();
}

std::string HttpBackend::complete(const CompletionRequest& request) {
    const auto& ep = request.endpoint;
    std::string url = ep.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    url += "/chat/completions";

    std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
    if (!curl) throw TransportError("curl_easy_init failed", false);

    curl_slist* raw_headers = curl_slist_append(nullptr, "Content-Type: application/json");
    if (!ep.api_key_env.empty()) {
        const char* key = std::getenv(ep.api_key_env.c_str());
        if (!key || !*key) {
            curl_slist_free_all(raw_headers);
            throw TransportError("endpoint " + ep.name + ": environment variable " + ep.api_key_env + " is not set",
                                 false);
        }
        raw_headers = curl_slist_append(raw_headers, ("Authorization: Bearer " + std::string(key)).c_str());
    }
    std::unique_ptr<curl_slist, decltype(&curl_slist_free_all)> headers(raw_headers, &curl_slist_free_all);

    const std::string payload = to_line(request_body(request));
    std::string response;
    curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, headers.get());
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDS, payload.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDSIZE, static_cast<long>(payload.size()));
    curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &write_body);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response);
    curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT_MS, static_cast<long>(ep.timeout.count()));
    curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);

    const CURLcode rc = curl_easy_perform(curl.get());
    if (rc != CURLE_OK) {
        throw TransportError("endpoint " + ep.name + ": " + curl_easy_strerror(rc), /*transient=*/true);
    }
    long status = 0;
    curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
    if (status < 200 || status >= 300) {
        const bool transient = status == 408 || status == 429 || status >= 500;
        throw TransportError("endpoint " + ep.name + ": HTTP " + std::to_string(status) + ": " +
                                 response.substr(0, 200),
                             transient, status);
    }
    return parse_response(response);
}

}  // namespace fhirqa
