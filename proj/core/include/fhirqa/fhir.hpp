#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fhirqa/json_lines.hpp"

namespace fhirqa {

/// The FHIR resource types the toolkit ingests. Anything else is dropped.
enum class ResourceType {
    Procedure,
    Medication,
    MedicationRequest,
    Encounter,
    ImagingStudy,
    Immunization,
    Device,
    CarePlan,
    ExplanationOfBenefit,
    AllergyIntolerance,
    Observation,
    Condition,
    DiagnosticReport,
};

inline constexpr std::array<ResourceType, 13> kSupportedResourceTypes = {
    ResourceType::Procedure,          ResourceType::Medication,   ResourceType::MedicationRequest,
    ResourceType::Encounter,          ResourceType::ImagingStudy, ResourceType::Immunization,
    ResourceType::Device,             ResourceType::CarePlan,     ResourceType::ExplanationOfBenefit,
    ResourceType::AllergyIntolerance, ResourceType::Observation,  ResourceType::Condition,
    ResourceType::DiagnosticReport,
};

std::string_view to_string(ResourceType type);
std::optional<ResourceType> resource_type_from_string(std::string_view name);

/// One bundle entry before filtering.
struct RawResource {
    std::string type;  // the entry's resourceType, verbatim
    Json resource;
};

/// A whitelisted resource after compaction, plus its human-readable label.
struct CompactResource {
    ResourceType resource_type{};
    std::string resource_id;
    std::string patient_id;
    Json body = Json::object();
    std::string label;

    bool operator==(const CompactResource&) const = default;
};

Json to_json(const CompactResource& r);
CompactResource compact_resource_from_json(const Json& j);

/// The view handed to language models: the body plus resourceType and id.
Json prompt_view(const CompactResource& r);

struct PatientRecord {
    std::string patient_id;
    std::vector<CompactResource> resources;

    bool operator==(const PatientRecord&) const = default;
};

Json to_json(const PatientRecord& r);
PatientRecord patient_record_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Bundle parsing and filtering

/// Splits a Bundle into its entries, in file order.
/// Throws ParseError (with byte offset) on malformed JSON and SchemaError when
/// the document is not a Bundle with an entry array.
std::vector<RawResource> parse_bundle(std::string_view bytes);

struct FilterSummary {
    std::map<std::string, std::size_t> kept;
    std::map<std::string, std::size_t> dropped;
};

/// Keeps entries whose resourceType is supported, preserving order.
std::vector<RawResource> filter_supported(const std::vector<RawResource>& raw,
                                          FilterSummary* summary = nullptr);

// ---------------------------------------------------------------------------
// Compaction

/// Declarative field retention.
///
/// Paths are dot-separated object keys; arrays along a path are traversed
/// element-wise. A leading "**." matches the remainder at any depth, so
/// "**.extension" removes every extension block. For each resource type the
/// optional keep list projects the resource onto those paths, then the type's
/// drop list and the global drop list are removed, then empty containers are
/// pruned.
class RetentionRuleset {
public:
    struct TypeRules {
        std::vector<std::string> keep;  // empty: keep everything
        std::vector<std::string> drop;
    };

    RetentionRuleset() = default;

    /// The ruleset shipped with the library (core/data/default_retention.json).
    static const RetentionRuleset& default_rules();

    static RetentionRuleset from_json(const Json& j);
    static RetentionRuleset load(const std::filesystem::path& path);
    Json to_json() const;

    const std::vector<std::string>& global_drop() const { return global_drop_; }
    const TypeRules* rules_for(std::string_view type) const;

    Json apply(std::string_view type, const Json& resource) const;

private:
    std::vector<std::string> global_drop_;
    std::map<std::string, TypeRules, std::less<>> per_type_;
};

/// "urn:uuid:abc" / "Patient/abc" / "abc" -> "abc".
std::string normalize_patient_reference(std::string_view reference);

/// Extracts id and patient reference, applies the ruleset and labels the result.
/// Throws IngestError when the resource has no id or no subject/patient reference,
/// or when its type is not supported.
CompactResource compact_resource(const RawResource& raw, const RetentionRuleset& rules);

/// Inverse of compaction for the retained content: a FHIR-shaped resource that
/// compacts back to `r` under any ruleset that kept `r.body`.
RawResource expand_resource(const CompactResource& r);

/// "<ResourceType> <display text> <MM-DD-YYYY>", omitting missing parts.
/// Falls back to "<ResourceType> <resource_id>" when both are missing.
std::string make_resource_label(const CompactResource& r);

/// Date used by labels, as MM-DD-YYYY, if the body has one.
std::optional<std::string> label_date(const Json& body);
std::optional<std::string> label_display(const Json& body);

// ---------------------------------------------------------------------------
// Corpus

struct CorpusSummary {
    std::size_t files = 0;
    std::size_t patients = 0;
    std::size_t resources = 0;
    std::map<std::string, std::size_t> kept;         // by resource type
    std::map<std::string, std::size_t> unsupported;  // filtered out by type
    std::map<std::string, std::size_t> empty;        // nothing left after compaction
    std::map<std::string, std::size_t> unlinked;     // no id or no patient reference
    std::map<std::string, std::size_t> foreign;      // references another patient
    std::size_t duplicate_ids = 0;
};

Json to_json(const CorpusSummary& s);

struct Corpus {
    std::vector<PatientRecord> records;
    CorpusSummary summary;
};

/// Builds one PatientRecord from a single bundle. `source` names the bundle in
/// errors and provides the fallback patient id.
PatientRecord ingest_bundle(std::string_view bytes, const RetentionRuleset& rules,
                            const std::string& source, CorpusSummary& summary);

/// Loads every *.json bundle in `directory`, ordered by filename.
/// Throws IoError naming the file that cannot be read or parsed, and
/// ValidationError when the directory holds no bundles.
Corpus load_corpus(const std::filesystem::path& directory,
                   const RetentionRuleset& rules = RetentionRuleset::default_rules(),
                   std::size_t threads = 0);

void write_corpus(const std::filesystem::path& path, const std::vector<PatientRecord>& records);
std::vector<PatientRecord> read_corpus(const std::filesystem::path& path);

}  // namespace fhirqa
