#include <mutex>

#include "fhirqa/error.hpp"
#include "fhirqa/model_client.hpp"

namespace fhirqa {

Json to_json(const ManifestEntry& e) {
    return Json{{"call_id", e.call_id},
                {"prompt_sha256", e.prompt_sha256},
                {"endpoint", e.endpoint},
                {"params", e.params},
                {"raw_response", e.raw_response},
                {"attempts", e.attempts},
                {"timestamp", e.timestamp}};
}

ManifestEntry manifest_entry_from_json(const Json& j) {
    try {
        ManifestEntry e;
        e.call_id = j.at("call_id").get<std::string>();
        e.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
        e.endpoint = j.at("endpoint").get<std::string>();
        e.params = j.value("params", Json::object());
        e.raw_response = j.at("raw_response").get<std::string>();
        e.attempts = j.value("attempts", 1);
        e.timestamp = j.value("timestamp", std::string());
        return e;
    } catch (const Json::exception& ex) {
        throw SchemaError(std::string("bad manifest entry: ") + ex.what());
    }
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) {
        for (const auto& row : read_json_lines(*path_)) {
            auto e = manifest_entry_from_json(row);
            entries_.try_emplace(key(e.endpoint, e.prompt_sha256), std::move(e));
        }
    } else if (path_->has_parent_path()) {
        std::filesystem::create_directories(path_->parent_path());
    }
    out_.open(*path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open cache file for append: " + path_->string());
}

std::string ResponseCache::key(std::string_view endpoint, std::string_view sha) {
    std::string k(endpoint);
    k += '\n';
    k += sha;
    return k;
}

std::optional<ManifestEntry> ResponseCache::find(std::string_view endpoint, std::string_view prompt_sha256) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(key(endpoint, prompt_sha256));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::append(const ManifestEntry& entry) {
    std::unique_lock lock(mu_);
    if (!entries_.try_emplace(key(entry.endpoint, entry.prompt_sha256), entry).second) return;
    if (out_.is_open()) {
        out_ << to_line(to_json(entry)) << '\n';
        out_.flush();
        if (!out_) throw IoError("cannot append to cache file: " + path_->string());
    }
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

}  // namespace fhirqa
