#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fhirqa/classification.hpp"
#include "fhirqa/dataset.hpp"
#include "fhirqa/meteor.hpp"
#include "fhirqa/model_client.hpp"
#include "fhirqa/prompts.hpp"
#include "fhirqa/relevance.hpp"

namespace fhirqa {

/// Finds the first "relevant" in the lowercased output; a preceding "ir" makes
/// it irrelevant. Throws RelevanceParseError when neither word occurs.
RelevanceLabel parse_relevance(std::string_view raw);

/// What to do with classifier output that names neither label.
enum class ParsePolicy {
    wrong,  // count it as a misclassification
    retry,  // one more call, then count as wrong
};

/// What the answer stage does when retrieval found nothing.
enum class FallbackPolicy {
    refuse,         // return kInsufficientInformationAnswer without a model call
    answer_anyway,  // prompt the model with an empty resource list
};

std::string_view to_string(ParsePolicy p);
std::string_view to_string(FallbackPolicy p);
std::optional<ParsePolicy> parse_policy_from_string(std::string_view s);
std::optional<FallbackPolicy> fallback_policy_from_string(std::string_view s);

inline constexpr std::string_view kInsufficientInformationAnswer =
    "I don't have enough information in your medical record to answer this question.";

struct PipelineOptions {
    PromptVariant variant = PromptVariant::task1_standard;
    ParsePolicy parse_policy = ParsePolicy::wrong;
    FallbackPolicy fallback = FallbackPolicy::refuse;
    /// Replace the endpoint's decode parameters for each stage when set.
    std::optional<DecodeParams> classify_decode = DecodeParams{0.0, 512, {}};
    std::optional<DecodeParams> answer_decode = DecodeParams{0.0, 1024, {}};
    std::size_t concurrency = 4;
};

struct Classification {
    std::optional<RelevanceLabel> label;  // empty when unparseable
    std::string raw;
    int calls = 0;
};

/// Classifies one resource, applying the parse policy. Transport errors propagate.
Classification try_classify(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                            const CompactResource& resource, const PipelineOptions& options = {});

/// Like try_classify but unparseable output is an error. Errors name the query and resource id.
RelevanceLabel classify_resource(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                                 const CompactResource& resource, const PipelineOptions& options = {});

struct Retrieval {
    std::vector<CompactResource> relevant;  // record order
    std::vector<std::string> raw;           // one per resource, record order
    std::size_t unparseable = 0;
};

/// Classifies every resource of the record. Unparseable outputs count as
/// irrelevant; PipelineError when the record is empty or every output was unparseable.
Retrieval retrieve_relevant(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                            const PatientRecord& record, const PipelineOptions& options = {});

struct AnswerResult {
    std::string answer;
    std::string raw;  // empty when no call was made
};

/// Grounded answer from `resources`. Whitespace-only replies are re-sampled
/// once, then PipelineError.
AnswerResult answer_query(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                          std::span<const CompactResource> resources, const PipelineOptions& options = {});

struct PipelineAnswer {
    std::string query;
    std::vector<std::string> used_resources;
    std::string answer;
    std::vector<std::string> stage1_raw;
    std::string stage2_raw;
};

Json to_json(const PipelineAnswer& a);

/// Classification with `classifier`, then answering with `answerer`.
PipelineAnswer run_end_to_end(ModelClient& client, const EndpointConfig& classifier, const EndpointConfig& answerer,
                              std::string_view query, const PatientRecord& record,
                              const PipelineOptions& options = {});

struct PredictionRow {
    std::size_t example_id = 0;  // index in the test set
    RelevanceLabel gold = RelevanceLabel::irrelevant;
    std::optional<RelevanceLabel> predicted;
    std::string raw;
};

Json to_json(const PredictionRow& r);
/// Accepts "unparseable" (or null) for a missing prediction. Throws SchemaError.
PredictionRow prediction_row_from_json(const Json& j);

/// Unparseable predictions count against the model: fn for relevant gold, fp otherwise.
ConfusionCounts count_predictions(std::span<const PredictionRow> rows);

struct Task1Evaluation {
    ClassificationReport report;
    std::vector<PredictionRow> predictions;
    std::size_t unparseable = 0;
};

/// Classifies every example; the report is count_predictions over the rows.
Task1Evaluation evaluate_task1(ModelClient& client, const EndpointConfig& endpoint,
                               std::span<const Task1Example> testset, const PipelineOptions& options = {});

struct AnswerRow {
    std::size_t example_id = 0;
    std::string query;
    std::string reference;
    std::string candidate;
    double meteor = 0;
};

Json to_json(const AnswerRow& r);

struct Task2Evaluation {
    MeteorReport report;
    std::vector<AnswerRow> answers;
};

/// Answers each example from its gold relevant resources and scores it against the reference answer.
Task2Evaluation evaluate_task2(ModelClient& client, const EndpointConfig& endpoint,
                               std::span<const Task2Example> testset, const PipelineOptions& options = {},
                               const MeteorConfig& meteor_config = {});

}  // namespace fhirqa
