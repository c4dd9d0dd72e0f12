#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fhirqa/json_lines.hpp"

namespace fhirqa {

struct DecodeParams {
    double temperature = 0.0;
    int max_tokens = 512;
    std::vector<std::string> stop;

    bool operator==(const DecodeParams&) const = default;
};

Json to_json(const DecodeParams& d);
DecodeParams decode_params_from_json(const Json& j);

/// A named chat-completions endpoint.
///
/// base_url selects the backend: "http://" / "https://" speak the
/// chat-completions wire protocol, "mock:<path>" loads a mock script file.
/// Secrets are never stored here; api_key_env names the environment variable
/// holding the bearer token.
struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model_id;
    std::string api_key_env;
    DecodeParams decode;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::size_t max_in_flight = 4;

    EndpointConfig with_decode(const DecodeParams& d) const {
        EndpointConfig copy = *this;
        copy.decode = d;
        return copy;
    }
};

Json to_json(const EndpointConfig& e);
/// Throws ValidationError for a missing name, non-positive timeout, negative
/// temperature, non-positive max_tokens or negative max_retries.
EndpointConfig endpoint_from_json(const Json& j);

/// The endpoints file: {"endpoints": [EndpointConfig...]}.
class EndpointRegistry {
public:
    EndpointRegistry() = default;

    static EndpointRegistry from_json(const Json& j);
    /// Relative "mock:" paths are resolved against the file's directory.
    static EndpointRegistry load(const std::filesystem::path& path);

    /// Throws ValidationError on a duplicate name.
    void add(EndpointConfig endpoint);
    const EndpointConfig* find(std::string_view name) const;
    /// Throws ValidationError naming the endpoint when it is not registered.
    const EndpointConfig& at(std::string_view name) const;
    std::vector<std::string> names() const;
    bool empty() const { return endpoints_.empty(); }

private:
    std::map<std::string, EndpointConfig, std::less<>> endpoints_;
};

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

using Messages = std::vector<ChatMessage>;

Json to_json(const ChatMessage& m);
Json to_json(const Messages& messages);
Messages messages_from_json(const Json& j);

/// Content of all messages joined by blank lines; what mock rules match against.
std::string prompt_text(const Messages& messages);

}  // namespace fhirqa
