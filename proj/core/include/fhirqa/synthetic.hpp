#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fhirqa {

/// Generates Synthea-shaped FHIR R4 bundles for offline runs.
///
/// Each bundle has one Patient, a random mix of all 13 supported resource
/// types with Synthea's wrapping (meta, narrative text, extensions, coding
/// systems, urn:uuid references) and, when `noise` is set, unsupported
/// entries (SupplyDelivery, Claim, Provenance) plus a standalone Medication
/// with no patient reference.
struct SyntheticCorpusOptions {
    std::size_t patients = 50;
    std::uint64_t seed = 7;
    std::size_t min_resources = 20;
    std::size_t max_resources = 45;
    bool noise = true;
};

/// Bundle JSON text for patient `index`; deterministic in (index, options.seed).
std::string synthetic_bundle(std::size_t index, const SyntheticCorpusOptions& options);

/// Patient id used by synthetic_bundle for `index`.
std::string synthetic_patient_id(std::size_t index, std::uint64_t seed);

/// Writes patient_XXXXX.json files and returns their paths in order.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& directory,
                                                          const SyntheticCorpusOptions& options);

}  // namespace fhirqa
