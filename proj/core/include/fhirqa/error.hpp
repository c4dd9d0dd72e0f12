#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fhirqa {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON. `offset()` is the byte position reported by the parser.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed JSON that does not have the expected shape.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A FHIR resource that cannot be turned into a CompactResource.
class IngestError : public Error {
public:
    IngestError(const std::string& resource, const std::string& reason);
    const std::string& resource() const noexcept { return resource_; }

private:
    std::string resource_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Precondition or configuration violation detected before any work is done.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Upstream model call failed after the retry budget.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool transient, long http_status = 0);
    bool transient() const noexcept { return transient_; }
    long http_status() const noexcept { return http_status_; }

private:
    bool transient_;
    long http_status_;
};

/// Cache-only mode and no cached response exists for the request.
class CacheMissError : public Error {
public:
    using Error::Error;
};

/// A generation batch exhausted its validation-retry budget.
class BatchGenerationError : public Error {
public:
    BatchGenerationError(const std::string& what, std::string last_raw);
    const std::string& last_raw() const noexcept { return last_raw_; }

private:
    std::string last_raw_;
};

/// Model output that does not contain a relevance keyword.
class RelevanceParseError : public Error {
public:
    explicit RelevanceParseError(std::string raw);
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class PipelineError : public Error {
public:
    using Error::Error;
};

}  // namespace fhirqa
