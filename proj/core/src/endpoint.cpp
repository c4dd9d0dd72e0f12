#include "fhirqa/endpoint.hpp"

#include "fhirqa/error.hpp"

namespace fhirqa {

Json to_json(const DecodeParams& d) {
    Json j{{"temperature", d.temperature}, {"max_tokens", d.max_tokens}};
    if (!d.stop.empty()) j["stop"] = d.stop;
    return j;
}

DecodeParams decode_params_from_json(const Json& j) {
    DecodeParams d;
    if (j.is_null()) return d;
    if (!j.is_object()) throw ValidationError("decode params must be an object");
    d.temperature = j.value("temperature", d.temperature);
    d.max_tokens = j.value("max_tokens", d.max_tokens);
    if (j.contains("stop")) d.stop = j.at("stop").get<std::vector<std::string>>();
    if (d.temperature < 0) throw ValidationError("decode.temperature must be >= 0");
    if (d.max_tokens <= 0) throw ValidationError("decode.max_tokens must be > 0");
    return d;
}

Json to_json(const EndpointConfig& e) {
    return Json{{"name", e.name},
                {"base_url", e.base_url},
                {"model_id", e.model_id},
                {"api_key_env", e.api_key_env},
                {"decode", to_json(e.decode)},
                {"timeout_ms", e.timeout.count()},
                {"max_retries", e.max_retries},
                {"max_in_flight", e.max_in_flight}};
}

EndpointConfig endpoint_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("endpoint config must be an object");
    EndpointConfig e;
    try {
        e.name = j.at("name").get<std::string>();
        e.base_url = j.value("base_url", std::string());
        e.model_id = j.value("model_id", std::string());
        e.api_key_env = j.value("api_key_env", std::string());
        e.decode = decode_params_from_json(j.value("decode", Json()));
        e.timeout = std::chrono::milliseconds(j.value("timeout_ms", e.timeout.count()));
        e.max_retries = j.value("max_retries", e.max_retries);
        e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
    } catch (const Json::exception& ex) {
        throw ValidationError(std::string("bad endpoint config: ") + ex.what());
    }
    if (e.name.empty()) throw ValidationError("endpoint name must not be empty");
    if (e.timeout.count() <= 0) throw ValidationError("endpoint " + e.name + ": timeout must be > 0");
    if (e.max_retries < 0) throw ValidationError("endpoint " + e.name + ": max_retries must be >= 0");
    if (e.max_in_flight == 0) e.max_in_flight = 1;
    return e;
}

EndpointRegistry EndpointRegistry::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("endpoints") || !j.at("endpoints").is_array()) {
        throw ValidationError("endpoints file must be {\"endpoints\": [...]}");
    }
    EndpointRegistry reg;
    for (const auto& e : j.at("endpoints")) reg.add(endpoint_from_json(e));
    return reg;
}

EndpointRegistry EndpointRegistry::load(const std::filesystem::path& path) {
    EndpointRegistry reg = from_json(parse_json(read_file(path)));
    for (auto& [name, e] : reg.endpoints_) {
        if (!e.base_url.starts_with("mock:")) continue;
        std::filesystem::path script = e.base_url.substr(5);
        if (script.is_relative()) e.base_url = "mock:" + (path.parent_path() / script).string();
    }
    return reg;
}

void EndpointRegistry::add(EndpointConfig endpoint) {
    const std::string name = endpoint.name;
    if (!endpoints_.emplace(name, std::move(endpoint)).second) {
        throw ValidationError("duplicate endpoint name: " + name);
    }
}

const EndpointConfig* EndpointRegistry::find(std::string_view name) const {
    auto it = endpoints_.find(name);
    return it == endpoints_.end() ? nullptr : &it->second;
}

const EndpointConfig& EndpointRegistry::at(std::string_view name) const {
    if (const auto* e = find(name)) return *e;
    throw ValidationError("unknown endpoint: " + std::string(name));
}

std::vector<std::string> EndpointRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, e] : endpoints_) out.push_back(name);
    return out;
}

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ValidationError("unknown chat role: " + std::string(s));
}

Json to_json(const ChatMessage& m) {
    return Json{{"role", std::string(to_string(m.role))}, {"content", m.content}};
}

Json to_json(const Messages& messages) {
    Json arr = Json::array();
    for (const auto& m : messages) arr.push_back(to_json(m));
    return arr;
}

Messages messages_from_json(const Json& j) {
    if (!j.is_array()) throw SchemaError("messages must be an array");
    Messages out;
    for (const auto& m : j) {
        out.push_back(ChatMessage{role_from_string(m.at("role").get<std::string>()),
                                  m.at("content").get<std::string>()});
    }
    return out;
}

std::string prompt_text(const Messages& messages) {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += "\n\n";
        out += m.content;
    }
    return out;
}

}  // namespace fhirqa
