#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fhirqa/endpoint.hpp"
#include "fhirqa/judge.hpp"
#include "fhirqa/model_client.hpp"
#include "fhirqa/pipeline.hpp"

namespace fhirqa {

enum class TaskKind { task1, task2, judge };

std::string_view to_string(TaskKind t);
std::optional<TaskKind> task_kind_from_string(std::string_view s);

/// One named run from an experiments file:
/// {"experiments": [{"name", "task", "endpoints", "testset", "variant", "seed",
///   "parse_policy", "fallback_policy", "decode", "protocol", "self", "concurrency"}]}
struct ExperimentConfig {
    std::string name;
    TaskKind task = TaskKind::task1;
    std::vector<std::string> endpoints;
    std::filesystem::path testset;
    PromptVariant variant = PromptVariant::task1_standard;
    std::uint64_t seed = 0;
    ParsePolicy parse_policy = ParsePolicy::wrong;
    FallbackPolicy fallback = FallbackPolicy::refuse;
    std::optional<DecodeParams> decode;
    Protocol protocol = Protocol::blind;  // judge runs
    std::string self_system;              // judge runs, informational
    std::size_t concurrency = 4;
    Json source = Json::object();  // the config object as written
};

/// Relative testset paths are resolved against `base_dir`.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {});
std::vector<ExperimentConfig> load_experiments(const std::filesystem::path& path);
/// Throws ValidationError when no experiment has that name.
const ExperimentConfig& find_experiment(std::span<const ExperimentConfig> experiments, std::string_view name);

/// Checks endpoints and testset before any model call. Throws ValidationError.
void validate_experiment(const ExperimentConfig& config, const EndpointRegistry& registry);

/// sha256 over the config object, the referenced endpoint configs and the testset bytes.
std::string experiment_hash(const ExperimentConfig& config, const EndpointRegistry& registry);

struct EndpointResult {
    std::string endpoint;
    bool ok = false;
    std::string error;
    Json metrics;  // ClassificationReport | MeteorReport | WinRateReport
    std::vector<std::string> artifacts;
};

struct RunRecord {
    std::string name;
    TaskKind task = TaskKind::task1;
    std::string config_hash;
    std::string started;
    std::string finished;
    std::string status;  // "ok" or "failed"
    std::string error;
    std::string testset;
    std::string variant;
    std::vector<EndpointResult> results;
    Json config = Json::object();
};

Json to_json(const RunRecord& r);
RunRecord run_record_from_json(const Json& j);

/// Runs the experiment per endpoint and writes <runs_dir>/<name>.json plus
/// per-endpoint dumps under <runs_dir>/<name>/. A failing endpoint stops the
/// run; the record written so far carries status "failed" and the error.
/// Throws ValidationError before any call when the config is invalid.
RunRecord run_experiment(const ExperimentConfig& config, const EndpointRegistry& registry, ModelClient& client,
                         const std::filesystem::path& runs_dir);

/// Every *.json record in the directory, in file-name order.
std::vector<RunRecord> read_run_records(const std::filesystem::path& runs_dir);

enum class ReportFormat { csv, markdown };
std::optional<ReportFormat> report_format_from_string(std::string_view s);

/// Table with one row per (endpoint, testset, run) of successful results.
/// Task 1 shows Accuracy/Precision/Recall/F1 as percentages with two
/// decimals, task 2 shows METEOR with four decimals, judge runs show win
/// rates. Throws ValidationError when records are empty or mix tasks.
std::string emit_report(std::span<const RunRecord> records, ReportFormat format);

}  // namespace fhirqa
