#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fhirqa/endpoint.hpp"
#include "fhirqa/fhir.hpp"

namespace fhirqa {

enum class PromptVariant {
    task1_standard,
    task1_extended,
    task2_answer,
    datagen_query,
    judge_blind,
    judge_disclosed,
};

std::string_view to_string(PromptVariant v);
/// Accepts the enum names plus the short CLI forms "standard" and "extended".
std::optional<PromptVariant> prompt_variant_from_string(std::string_view s);

/// Appended to the relevance prompt by the extended variant.
inline constexpr std::string_view kOneWordInstruction =
    "Answer with exactly one word: \"relevant\" or \"irrelevant\".";

/// Resources as the compact JSON array embedded in prompts.
std::string serialize_resources(std::span<const CompactResource> resources);

/// Query-generation prompt for one batch of a patient's resources.
Messages render_datagen_prompt(std::string_view patient_id, std::span<const CompactResource> resources);

/// Relevance-classification prompt. Throws ValidationError for non-task1 variants.
Messages render_task1_prompt(std::string_view query, const CompactResource& resource, PromptVariant variant);

/// Grounded-answer prompt. Throws ValidationError for an empty resource list
/// unless allow_empty is set.
Messages render_task2_prompt(std::string_view query, std::span<const CompactResource> resources,
                             bool allow_empty = false);

}  // namespace fhirqa
