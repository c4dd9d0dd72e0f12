#include "fhirqa/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "fhirqa/error.hpp"
#include "fhirqa/parallel.hpp"

namespace fhirqa {
namespace {

std::string trimmed(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string context(std::string_view query, const CompactResource& r) {
    return "query \"" + std::string(query) + "\", resource " + r.resource_id;
}

}  // namespace

RelevanceLabel parse_relevance(std::string_view raw) {
    std::string text = trimmed(raw);
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto pos = text.find("relevant");
    if (pos == std::string::npos) throw RelevanceParseError(std::string(raw));
    if (pos >= 2 && text.compare(pos - 2, 2, "ir") == 0) return RelevanceLabel::irrelevant;
    return RelevanceLabel::relevant;
}

std::string_view to_string(ParsePolicy p) { return p == ParsePolicy::retry ? "retry" : "wrong"; }
std::string_view to_string(FallbackPolicy p) {
    return p == FallbackPolicy::answer_anyway ? "answer-anyway" : "refuse";
}

std::optional<ParsePolicy> parse_policy_from_string(std::string_view s) {
    if (s == "wrong") return ParsePolicy::wrong;
    if (s == "retry") return ParsePolicy::retry;
    return std::nullopt;
}

std::optional<FallbackPolicy> fallback_policy_from_string(std::string_view s) {
    if (s == "refuse") return FallbackPolicy::refuse;
    if (s == "answer-anyway" || s == "answer_anyway") return FallbackPolicy::answer_anyway;
    return std::nullopt;
}

Classification try_classify(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                            const CompactResource& resource, const PipelineOptions& options) {
    const Messages prompt = render_task1_prompt(query, resource, options.variant);
    const int attempts = options.parse_policy == ParsePolicy::retry ? 2 : 1;
    Classification out;
    for (int a = 0; a < attempts; ++a) {
        try {
            out.raw = client.complete(endpoint, prompt, CallOptions{options.classify_decode, static_cast<std::size_t>(a)});
        } catch (const TransportError& e) {
            throw TransportError(context(query, resource) + ": " + e.what(), e.transient(), e.http_status());
        }
        ++out.calls;
        try {
            out.label = parse_relevance(out.raw);
            return out;
        } catch (const RelevanceParseError&) {
        }
    }
    return out;
}

RelevanceLabel classify_resource(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                                 const CompactResource& resource, const PipelineOptions& options) {
    auto c = try_classify(client, endpoint, query, resource, options);
    if (!c.label) throw PipelineError(context(query, resource) + ": " + RelevanceParseError(c.raw).what());
    return *c.label;
}

Retrieval retrieve_relevant(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                            const PatientRecord& record, const PipelineOptions& options) {
    if (record.resources.empty()) throw PipelineError("patient " + record.patient_id + " has no resources");
    const std::size_t n = record.resources.size();
    std::vector<Classification> results(n);
    parallel_for(n, options.concurrency, [&](std::size_t i) {
        results[i] = try_classify(client, endpoint, query, record.resources[i], options);
    });
    Retrieval out;
    for (std::size_t i = 0; i < n; ++i) {
        out.raw.push_back(std::move(results[i].raw));
        if (!results[i].label) {
            ++out.unparseable;
        } else if (*results[i].label == RelevanceLabel::relevant) {
            out.relevant.push_back(record.resources[i]);
        }
    }
    if (out.unparseable == n) {
        throw PipelineError("every classification for patient " + record.patient_id + " was unparseable");
    }
    return out;
}

AnswerResult answer_query(ModelClient& client, const EndpointConfig& endpoint, std::string_view query,
                          std::span<const CompactResource> resources, const PipelineOptions& options) {
    if (resources.empty() && options.fallback == FallbackPolicy::refuse) {
        return AnswerResult{std::string(kInsufficientInformationAnswer), ""};
    }
    const Messages prompt = render_task2_prompt(query, resources, /*allow_empty=*/true);
    AnswerResult out;
    for (std::size_t sample = 0; sample < 2; ++sample) {
        out.raw = client.complete(endpoint, prompt, CallOptions{options.answer_decode, sample});
        out.answer = trimmed(out.raw);
        if (!out.answer.empty()) return out;
    }
    throw PipelineError("empty answer for query \"" + std::string(query) + "\"");
}

Json to_json(const PipelineAnswer& a) {
    return Json{{"query", a.query},
                {"used_resources", a.used_resources},
                {"answer", a.answer},
                {"stage1_raw", a.stage1_raw},
                {"stage2_raw", a.stage2_raw}};
}

PipelineAnswer run_end_to_end(ModelClient& client, const EndpointConfig& classifier, const EndpointConfig& answerer,
                              std::string_view query, const PatientRecord& record, const PipelineOptions& options) {
    auto retrieval = retrieve_relevant(client, classifier, query, record, options);
    PipelineAnswer out;
    out.query = std::string(query);
    for (const auto& r : retrieval.relevant) out.used_resources.push_back(r.resource_id);
    auto answer = answer_query(client, answerer, query, retrieval.relevant, options);
    out.answer = std::move(answer.answer);
    out.stage1_raw = std::move(retrieval.raw);
    out.stage2_raw = std::move(answer.raw);
    return out;
}

Json to_json(const PredictionRow& r) {
    return Json{{"example_id", r.example_id},
                {"gold", std::string(to_string(r.gold))},
                {"predicted", r.predicted ? std::string(to_string(*r.predicted)) : std::string("unparseable")},
                {"raw", r.raw}};
}

PredictionRow prediction_row_from_json(const Json& j) {
    auto label = [](const Json& v) -> std::optional<RelevanceLabel> {
        if (v.is_null()) return std::nullopt;
        const auto s = v.get<std::string>();
        if (s == "unparseable") return std::nullopt;
        const auto l = relevance_from_string(s);
        if (!l) throw SchemaError("prediction label must be relevant, irrelevant or unparseable, got \"" + s + "\"");
        return l;
    };
    try {
        PredictionRow r;
        r.example_id = j.value("example_id", std::size_t{0});
        const auto gold = label(j.at("gold"));
        if (!gold) throw SchemaError("gold label missing");
        r.gold = *gold;
        r.predicted = j.contains("predicted") ? label(j.at("predicted")) : std::nullopt;
        r.raw = j.value("raw", "");
        return r;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad prediction row: ") + e.what());
    }
}

ConfusionCounts count_predictions(std::span<const PredictionRow> rows) {
    ConfusionCounts counts;
    for (const auto& r : rows) {
        const auto wrong = r.gold == RelevanceLabel::relevant ? RelevanceLabel::irrelevant : RelevanceLabel::relevant;
        counts.add(r.gold, r.predicted.value_or(wrong));
    }
    return counts;
}

Task1Evaluation evaluate_task1(ModelClient& client, const EndpointConfig& endpoint,
                               std::span<const Task1Example> testset, const PipelineOptions& options) {
    if (testset.empty()) throw ValidationError("task 1 test set is empty");
    std::vector<Classification> results(testset.size());
    parallel_for(testset.size(), options.concurrency, [&](std::size_t i) {
        results[i] = try_classify(client, endpoint, testset[i].query, testset[i].resource, options);
    });
    Task1Evaluation out;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        if (!results[i].label) ++out.unparseable;
        out.predictions.push_back(PredictionRow{i, testset[i].relevance, results[i].label, results[i].raw});
    }
    out.report = classification_report(count_predictions(out.predictions));
    return out;
}

Json to_json(const AnswerRow& r) {
    return Json{{"example_id", r.example_id},
                {"query", r.query},
                {"reference", r.reference},
                {"candidate", r.candidate},
                {"meteor", r.meteor}};
}

Task2Evaluation evaluate_task2(ModelClient& client, const EndpointConfig& endpoint,
                               std::span<const Task2Example> testset, const PipelineOptions& options,
                               const MeteorConfig& meteor_config) {
    if (testset.empty()) throw ValidationError("task 2 test set is empty");
    meteor_config.validate();
    std::vector<std::string> answers(testset.size());
    parallel_for(testset.size(), options.concurrency, [&](std::size_t i) {
        answers[i] = answer_query(client, endpoint, testset[i].query, testset[i].relevant_resources, options).answer;
    });
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(testset.size());
    for (std::size_t i = 0; i < testset.size(); ++i) pairs.emplace_back(answers[i], testset[i].answer);
    Task2Evaluation out;
    out.report = corpus_meteor(pairs, meteor_config);
    for (std::size_t i = 0; i < testset.size(); ++i) {
        out.answers.push_back(
            AnswerRow{i, testset[i].query, testset[i].answer, std::move(pairs[i].first), out.report.per_example[i]});
    }
    return out;
}

}  // namespace fhirqa
