#include "fhirqa/error.hpp"
#include "fhirqa/model_client.hpp"

namespace fhirqa {

MockBackend MockBackend::from_json(const Json& script) {
    if (!script.is_object()) throw SchemaError("mock script must be a JSON object");
    MockBackend mock;
    try {
        if (auto it = script.find("exact"); it != script.end()) {
            for (const auto& [sha, response] : it->items()) mock.exact(sha, response.get<std::string>());
        }
        if (auto it = script.find("rules"); it != script.end()) {
            for (const auto& r : *it) {
                mock.rule(r.at("pattern").get<std::string>(), r.at("response").get<std::string>());
            }
        }
        if (auto it = script.find("default"); it != script.end() && !it->is_null()) {
            mock.fallback(it->get<std::string>());
        }
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad mock script: ") + e.what());
    }
    return mock;
}

MockBackend MockBackend::load(const std::filesystem::path& path) {
    try {
        return from_json(parse_json(read_file(path)));
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

MockBackend& MockBackend::exact(std::string sha256, std::string response) {
    exact_.insert_or_assign(std::move(sha256), std::move(response));
    return *this;
}

MockBackend& MockBackend::rule(const std::string& pattern, std::string response) {
    try {
        rules_.push_back(Rule{pattern, std::regex(pattern, std::regex::ECMAScript), std::move(response)});
    } catch (const std::regex_error& e) {
        throw SchemaError("bad mock rule pattern \"" + pattern + "\": " + e.what());
    }
    return *this;
}

MockBackend& MockBackend::fallback(std::string response) {
    default_ = std::move(response);
    return *this;
}

std::optional<std::string> MockBackend::resolve(const Messages& messages, std::string_view request_sha) const {
    if (!exact_.empty()) {
        if (auto it = exact_.find(messages_sha256(messages)); it != exact_.end()) return it->second;
        if (auto it = exact_.find(request_sha); it != exact_.end()) return it->second;
    }
    if (!rules_.empty()) {
        const std::string text = prompt_text(messages);
        for (const auto& rule : rules_) {
            std::smatch match;
            if (std::regex_search(text, match, rule.regex)) return match.format(rule.response);
        }
    }
    return default_;
}

std::string MockBackend::complete(const CompletionRequest& request) {
    if (auto response = resolve(request.messages, request.prompt_sha256)) return *response;
    throw TransportError("mock endpoint " + request.endpoint.name + ": no exact, rule or default response",
                         /*transient=*/false);
}

}  // namespace fhirqa
