#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fhirqa/endpoint.hpp"
#include "fhirqa/model_client.hpp"

namespace fhirqa::cli {

/// State shared by every subcommand: global options plus the lazily built
/// endpoint registry and model client.
class Context {
public:
    std::string endpoints_path = "endpoints.json";
    std::string cache_path;
    std::string cache_mode = "read_write";

    const EndpointRegistry& registry();
    const EndpointConfig& endpoint(const std::string& name) { return registry().at(name); }
    ModelClient& client();

private:
    std::optional<EndpointRegistry> registry_;
    std::unique_ptr<ModelClient> client_;
};

void print_json(const Json& j);
/// Writes `text` to `path`, creating parent directories.
void write_output(const std::filesystem::path& path, const std::string& text);
void write_rows(const std::filesystem::path& path, const std::vector<Json>& rows);
/// Diagnostic line on stderr.
void note(const std::string& message);

void add_data_commands(CLI::App& app, Context& ctx);
void add_eval_commands(CLI::App& app, Context& ctx);
void add_judge_commands(CLI::App& app, Context& ctx);
void add_experiment_commands(CLI::App& app, Context& ctx);

}  // namespace fhirqa::cli
