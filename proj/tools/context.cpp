#include "context.hpp"

#include <iostream>

#include "fhirqa/error.hpp"
#include "fhirqa/json_lines.hpp"

namespace fhirqa::cli {

const EndpointRegistry& Context::registry() {
    if (!registry_) registry_ = EndpointRegistry::load(endpoints_path);
    return *registry_;
}

ModelClient& Context::client() {
    if (!client_) {
        ClientOptions options;
        if (cache_mode == "off") {
            options.cache_mode = CacheMode::off;
        } else if (cache_mode == "read_only" || cache_mode == "read-only") {
            options.cache_mode = CacheMode::read_only;
        } else if (cache_mode == "read_write" || cache_mode == "read-write") {
            options.cache_mode = CacheMode::read_write;
        } else {
            throw ValidationError("--cache-mode must be off, read_write or read_only");
        }
        auto cache = cache_path.empty() ? std::make_shared<ResponseCache>()
                                        : std::make_shared<ResponseCache>(std::filesystem::path(cache_path));
        client_ = std::make_unique<ModelClient>(options, std::move(cache));
    }
    return *client_;
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

void write_output(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_file(path, text);
}

void write_rows(const std::filesystem::path& path, const std::vector<Json>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_json_lines(path, rows);
}

void note(const std::string& message) { std::cerr << message << "\n"; }

}  // namespace fhirqa::cli
