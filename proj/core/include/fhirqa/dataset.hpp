#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"
#include "fhirqa/model_client.hpp"
#include "fhirqa/prompts.hpp"
#include "fhirqa/random.hpp"
#include "fhirqa/relevance.hpp"

namespace fhirqa {

struct ResourceBatch {
    std::string patient_id;
    std::size_t batch_index = 0;
    std::vector<CompactResource> resources;
};

inline Messages render_datagen_prompt(const ResourceBatch& batch) {
    return render_datagen_prompt(batch.patient_id, batch.resources);
}

/// One (query, resource, relevance) row.
struct Task1Example {
    CompactResource resource;
    std::string query;
    RelevanceLabel relevance = RelevanceLabel::irrelevant;
    std::string patient_id;
    std::string resource_label;

    bool operator==(const Task1Example&) const = default;
};

/// Input to answer generation: a query and the resources that were used to write it.
struct Task2Input {
    std::string query;
    std::vector<CompactResource> relevant_resources;
    std::string patient_id;

    bool operator==(const Task2Input&) const = default;
};

struct Task2Example {
    std::string query;
    std::vector<CompactResource> relevant_resources;
    std::string answer;
    std::string patient_id;

    bool operator==(const Task2Example&) const = default;
};

Json to_json(const Task1Example& e);
Json to_json(const Task2Example& e);
Task1Example task1_example_from_json(const Json& j);
Task2Example task2_example_from_json(const Json& j);

std::vector<Task1Example> read_task1_dataset(const std::filesystem::path& path);
std::vector<Task2Example> read_task2_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Batching and generation

/// n_batches batches of batch_size distinct resources each, sampled without
/// replacement within a batch and independently across batches. The stream
/// is derived from (seed, patient_id), so results do not depend on corpus
/// order. Returns an empty list when the record has fewer than batch_size
/// resources.
std::vector<ResourceBatch> sample_batches(const PatientRecord& record, std::size_t n_batches = 10,
                                          std::size_t batch_size = 10, std::uint64_t seed = 0);

enum class FailurePolicy { abort, quarantine };

struct GenerationOptions {
    std::size_t n_batches = 10;
    std::size_t batch_size = 10;
    std::uint64_t seed = 0;
    /// Attempts per batch (or per answer) before the item fails.
    int retry_budget = 3;
    DecodeParams query_decode{0.7, 2048, {}};
    DecodeParams answer_decode{0.0, 1024, {}};
    FailurePolicy on_failure = FailurePolicy::abort;
    std::size_t concurrency = 4;
};

/// Parses and validates a query-generation reply for `batch`.
///
/// Accepts the JSON array alone or wrapped in prose / code fences. Elements
/// are matched to resources by the id found in their "resource" field, or by
/// position when it carries none. Throws ValidationError when the reply does
/// not have one element per resource, one shared non-empty query, only
/// relevant/irrelevant labels and at least one relevant resource.
std::vector<Task1Example> parse_task1_reply(const ResourceBatch& batch, std::string_view reply);

/// Renders, completes and validates one batch, re-sampling on validation
/// failure. Throws BatchGenerationError carrying the last reply once the
/// retry budget is spent.
std::vector<Task1Example> generate_task1_batch(const ResourceBatch& batch, ModelClient& client,
                                               const EndpointConfig& endpoint, const GenerationOptions& options = {});

/// A generation item that failed validation and was set aside.
struct QuarantineRecord {
    std::string kind;  // "task1_batch" or "task2_answer"
    std::string patient_id;
    std::size_t index = 0;
    std::string query;
    std::string error;
    std::string last_raw;
};

Json to_json(const QuarantineRecord& q);

struct Task1BuildResult {
    std::vector<Task1Example> examples;
    std::size_t batches = 0;
    std::vector<std::string> skipped_patients;  // fewer than batch_size resources
    std::vector<QuarantineRecord> quarantine;
    std::size_t duplicate_queries = 0;  // repeated query strings within one patient
};

Json summary_json(const Task1BuildResult& r);

/// Generates n_batches x batch_size examples per eligible patient. Batches run
/// concurrently up to options.concurrency and are committed in batch order.
/// Under FailurePolicy::abort the first failing batch is rethrown; every
/// completed call is already in the client's cache, so a rerun with the same
/// seed and cache resumes and yields the same dataset.
Task1BuildResult build_task1_dataset(std::span<const PatientRecord> corpus, ModelClient& client,
                                     const EndpointConfig& endpoint, const GenerationOptions& options = {});

struct Task2Derivation {
    std::vector<Task2Input> inputs;
    std::size_t excluded_groups = 0;  // (patient, query) groups without a relevant resource
};

/// One input per distinct (patient_id, query) in first-appearance order, with
/// that group's relevant resources in dataset order.
Task2Derivation derive_task2_inputs(std::span<const Task1Example> task1);

/// Answers one input with the grounded-answer prompt. Whitespace-only replies
/// are re-sampled; throws BatchGenerationError when the budget is spent.
Task2Example generate_task2_answer(const Task2Input& input, ModelClient& client, const EndpointConfig& endpoint,
                                   const GenerationOptions& options = {});

struct Task2BuildResult {
    std::vector<Task2Example> examples;
    std::vector<QuarantineRecord> quarantine;
};

Task2BuildResult generate_task2_answers(std::span<const Task2Input> inputs, ModelClient& client,
                                        const EndpointConfig& endpoint, const GenerationOptions& options = {});

// ---------------------------------------------------------------------------
// Splits

template <typename T>
struct DatasetSplit {
    std::vector<T> train;
    std::vector<T> test;
    std::uint64_t seed = 0;
    double test_fraction = 0;
};

/// Partitions `groups` (lists of item indices) uniformly at random, sending
/// round(test_fraction * groups) of them to the test side. Items keep their
/// input order on both sides.
template <typename T>
DatasetSplit<T> split_groups(std::span<const T> items, const std::vector<std::vector<std::size_t>>& groups,
                             double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test fraction must be in (0, 1)");
    }
    if (items.size() < 2 || groups.size() < 2) throw ValidationError("cannot split fewer than 2 examples");
    Rng rng(seed);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(groups.size())));
    const auto test_groups = rng.sample_indices(groups.size(), n_test);
    std::vector<char> is_test(items.size(), 0);
    for (auto g : test_groups) {
        for (auto i : groups[g]) is_test[i] = 1;
    }
    DatasetSplit<T> out;
    out.seed = seed;
    out.test_fraction = test_fraction;
    for (std::size_t i = 0; i < items.size(); ++i) (is_test[i] ? out.test : out.train).push_back(items[i]);
    return out;
}

/// Ungrouped split: every example is its own unit, so |test| = round(fraction * N).
template <typename T>
DatasetSplit<T> split(std::span<const T> items, double test_fraction, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> groups(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) groups[i] = {i};
    return split_groups(items, groups, test_fraction, seed);
}

/// Task 1 split grouped by (patient_id, query) so a query never straddles the partition.
DatasetSplit<Task1Example> split_by_query(std::span<const Task1Example> items, double test_fraction,
                                          std::uint64_t seed);

/// n items sampled uniformly without replacement, kept in input order.
template <typename T>
std::vector<T> subsample(std::span<const T> train, std::size_t n, std::uint64_t seed) {
    if (n > train.size()) {
        throw ValidationError("cannot subsample " + std::to_string(n) + " from " + std::to_string(train.size()));
    }
    Rng rng(seed);
    auto picked = rng.sample_indices(train.size(), n);
    std::sort(picked.begin(), picked.end());
    std::vector<T> out;
    out.reserve(n);
    for (auto i : picked) out.push_back(train[i]);
    return out;
}

}  // namespace fhirqa
