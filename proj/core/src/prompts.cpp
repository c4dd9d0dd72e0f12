#include "fhirqa/prompts.hpp"

#include <initializer_list>
#include <utility>

#include "fhirqa/error.hpp"

namespace fhirqa {
namespace {

using Substitution = std::pair<std::string_view, std::string_view>;

// Single left-to-right pass, so substituted text is never rescanned.
std::string substitute(std::string_view tmpl, std::initializer_list<Substitution> subs) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool replaced = false;
        for (const auto& [key, value] : subs) {
            if (tmpl.substr(i, key.size()) == key) {
                out += value;
                i += key.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out.push_back(tmpl[i++]);
    }
    return out;
}

constexpr std::string_view kDatagenIntro =
    "Pretend you are a patient curious about an aspect of your medical history. Come up with a query that "
    "this patient might have regarding their medical data. At least one or more medical data points from the "
    "given set of FHIR resources should be sufficient to answer the query. Make the question realistic, simple, "
    "and non-technical. For example, 'What are my current medicines?' or 'When was my last shot?' or 'What were "
    "the complications of my last heart procedure?;";

// {N} is the batch size, {resources} the serialized batch.
constexpr std::string_view kDatagenTask =
    "Generate an output in the JSON format below corresponding to each of the {N} inputted resources after "
    "generating 1 query based on one or more of the {N} given FHIR resources: {resources}. The relevance should "
    "be 'relevant' if the resource was used by the model for the particular query, and 'irrelevant' if not. The "
    "resource_label should be a natural language label generated for each of the {N} resources in the format: "
    "'Condition Cardiac Arrest 06-19-2018'. Therefore, the output should be the {N} JSON formatted files per "
    "resource, with patient_id being the same throughout, relevance can be either relevant or irrelevant if it "
    "wasn't used to generate the query. Only one query has to be generated from the {N} resources. So the query "
    "label will be the same for all {N}. Use the following format for the output:";

constexpr std::string_view kDatagenFormat =
    "json [\n"
    "    {\n"
    "        \"resource\": \"{{resource}}\",\n"
    "        \"query\": \"{{query}}\",\n"
    "        \"relevance\": \"{{relevance}}\",\n"
    "        \"patient_id\": \"{patient_id}\",\n"
    "        \"resource_label\": \"{{resource_label}}\"\n"
    "    }  ]";

constexpr std::string_view kTask1System =
    "You classify FHIR resources from a patient's medical record by their relevance to the patient's query. "
    "A resource is relevant if it is needed to answer the query.";

constexpr std::string_view kTask2Template =
    "You are a knowledgeable and helpful medical assistant. Answer the given query using the list of relevant "
    "FHIR resources provided to you. 'Query': {query}, 'Resources': {resources}";

}  // namespace

std::string_view to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::task1_standard: return "task1_standard";
        case PromptVariant::task1_extended: return "task1_extended";
        case PromptVariant::task2_answer: return "task2_answer";
        case PromptVariant::datagen_query: return "datagen_query";
        case PromptVariant::judge_blind: return "judge_blind";
        case PromptVariant::judge_disclosed: return "judge_disclosed";
    }
    return "";
}

std::optional<PromptVariant> prompt_variant_from_string(std::string_view s) {
    if (s == "standard") return PromptVariant::task1_standard;
    if (s == "extended") return PromptVariant::task1_extended;
    for (auto v : {PromptVariant::task1_standard, PromptVariant::task1_extended, PromptVariant::task2_answer,
                   PromptVariant::datagen_query, PromptVariant::judge_blind, PromptVariant::judge_disclosed}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::string serialize_resources(std::span<const CompactResource> resources) {
    Json arr = Json::array();
    for (const auto& r : resources) arr.push_back(prompt_view(r));
    return to_line(arr);
}

Messages render_datagen_prompt(std::string_view patient_id, std::span<const CompactResource> resources) {
    const std::string n = std::to_string(resources.size());
    const std::string serialized = serialize_resources(resources);
    std::string task = substitute(kDatagenTask, {{"{N}", n}, {"{resources}", serialized}});
    // Only the single-brace placeholder is filled; {{...}} are literal slots for the model.
    std::string format = substitute(kDatagenFormat, {{"{{", "{{"}, {"{patient_id}", patient_id}});
    std::string content = std::string(kDatagenIntro) + "\n\n" + task + "\n\n" + format;
    return {ChatMessage{Role::user, std::move(content)}};
}

Messages render_task1_prompt(std::string_view query, const CompactResource& resource, PromptVariant variant) {
    if (variant != PromptVariant::task1_standard && variant != PromptVariant::task1_extended) {
        throw ValidationError("relevance prompt needs a task1 variant, got " + std::string(to_string(variant)));
    }
    std::string user = "QUERY:\n" + std::string(query) + "\n\nRESOURCE:\n" + to_line(prompt_view(resource)) +
                       "\n\nIs this resource relevant or irrelevant to the query?";
    if (variant == PromptVariant::task1_extended) {
        user += "\n";
        user += kOneWordInstruction;
    }
    return {ChatMessage{Role::system, std::string(kTask1System)}, ChatMessage{Role::user, std::move(user)}};
}

Messages render_task2_prompt(std::string_view query, std::span<const CompactResource> resources, bool allow_empty) {
    if (resources.empty() && !allow_empty) {
        throw ValidationError("answer prompt needs at least one resource");
    }
    const std::string serialized = serialize_resources(resources);
    std::string content = substitute(kTask2Template, {{"{query}", query}, {"{resources}", serialized}});
    return {ChatMessage{Role::user, std::move(content)}};
}

}  // namespace fhirqa
