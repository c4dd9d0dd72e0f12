#include "fhirqa/error.hpp"

#include <utility>

namespace fhirqa {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

IngestError::IngestError(const std::string& resource, const std::string& reason)
    : Error("cannot ingest " + resource + ": " + reason), resource_(resource) {}

TransportError::TransportError(const std::string& what, bool transient, long http_status)
    : Error(what), transient_(transient), http_status_(http_status) {}

BatchGenerationError::BatchGenerationError(const std::string& what, std::string last_raw)
    : Error(what), last_raw_(std::move(last_raw)) {}

RelevanceParseError::RelevanceParseError(std::string raw)
    : Error("no relevance keyword in model output: \"" +
            (raw.size() > 80 ? raw.substr(0, 80) + "..." : raw) + "\""),
      raw_(std::move(raw)) {}

}  // namespace fhirqa
