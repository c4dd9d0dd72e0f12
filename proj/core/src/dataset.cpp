#include "fhirqa/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "fhirqa/hashing.hpp"
#include "fhirqa/parallel.hpp"

namespace fhirqa {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// The outermost [...] in a reply, tolerating prose and ``` fences around it.
Json extract_json_array(std::string_view reply) {
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw ValidationError("reply contains no JSON array");
    }
    try {
        Json arr = Json::parse(reply.substr(open, close - open + 1));
        if (!arr.is_array()) throw ValidationError("reply is not a JSON array");
        return arr;
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("reply array is not valid JSON: ") + e.what());
    }
}

// Resource id named by an element's "resource" field, if any.
std::optional<std::string> element_resource_id(const Json& field, const std::set<std::string>& batch_ids) {
    if (field.is_object()) {
        for (const char* key : {"id", "resource_id"}) {
            if (auto it = field.find(key); it != field.end() && it->is_string()) return it->get<std::string>();
        }
        return std::nullopt;
    }
    if (!field.is_string()) return std::nullopt;
    const auto& s = field.get_ref<const std::string&>();
    if (batch_ids.count(s)) return s;
    if (!s.empty() && s.front() == '{') {
        try {
            return element_resource_id(Json::parse(s), batch_ids);
        } catch (const Json::parse_error&) {
        }
    }
    return std::nullopt;
}

std::string group_key(const std::string& patient_id, const std::string& query) {
    return patient_id + '\x1f' + query;
}

QuarantineRecord quarantine_from(const BatchGenerationError& e, std::string kind, std::string patient,
                                 std::size_t index, std::string query) {
    return QuarantineRecord{std::move(kind), std::move(patient), index, std::move(query), e.what(), e.last_raw()};
}

}  // namespace

std::optional<RelevanceLabel> relevance_from_string(std::string_view s) {
    const std::string t = lower(trim(s));
    if (t == "relevant") return RelevanceLabel::relevant;
    if (t == "irrelevant") return RelevanceLabel::irrelevant;
    return std::nullopt;
}

Json to_json(const Task1Example& e) {
    return Json{{"resource", to_json(e.resource)},
                {"query", e.query},
                {"relevance", std::string(to_string(e.relevance))},
                {"patient_id", e.patient_id},
                {"resource_label", e.resource_label}};
}

Json to_json(const Task2Example& e) {
    Json resources = Json::array();
    for (const auto& r : e.relevant_resources) resources.push_back(to_json(r));
    return Json{{"query", e.query},
                {"relevant_resources", std::move(resources)},
                {"answer", e.answer},
                {"patient_id", e.patient_id}};
}

Task1Example task1_example_from_json(const Json& j) {
    try {
        Task1Example e;
        e.resource = compact_resource_from_json(j.at("resource"));
        e.query = j.at("query").get<std::string>();
        const auto label = relevance_from_string(j.at("relevance").get<std::string>());
        if (!label) throw SchemaError("relevance must be relevant or irrelevant");
        e.relevance = *label;
        e.patient_id = j.at("patient_id").get<std::string>();
        e.resource_label = j.value("resource_label", e.resource.label);
        if (e.query.empty()) throw SchemaError("query must not be empty");
        return e;
    } catch (const Json::exception& ex) {
        throw SchemaError(std::string("bad task 1 record: ") + ex.what());
    }
}

Task2Example task2_example_from_json(const Json& j) {
    try {
        Task2Example e;
        e.query = j.at("query").get<std::string>();
        for (const auto& r : j.at("relevant_resources")) e.relevant_resources.push_back(compact_resource_from_json(r));
        e.answer = j.at("answer").get<std::string>();
        e.patient_id = j.at("patient_id").get<std::string>();
        if (e.relevant_resources.empty()) throw SchemaError("relevant_resources must not be empty");
        return e;
    } catch (const Json::exception& ex) {
        throw SchemaError(std::string("bad task 2 record: ") + ex.what());
    }
}

namespace {
template <typename T, typename Fn>
std::vector<T> read_rows(const std::filesystem::path& path, Fn&& from_json) {
    std::vector<T> out;
    std::size_t line = 0;
    for (const auto& row : read_json_lines(path)) {
        ++line;
        try {
            out.push_back(from_json(row));
        } catch (const SchemaError& e) {
            throw SchemaError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}
}  // namespace

std::vector<Task1Example> read_task1_dataset(const std::filesystem::path& path) {
    return read_rows<Task1Example>(path, task1_example_from_json);
}

std::vector<Task2Example> read_task2_dataset(const std::filesystem::path& path) {
    return read_rows<Task2Example>(path, task2_example_from_json);
}

std::vector<ResourceBatch> sample_batches(const PatientRecord& record, std::size_t n_batches, std::size_t batch_size,
                                          std::uint64_t seed) {
    if (batch_size == 0) throw ValidationError("batch size must be > 0");
    std::vector<ResourceBatch> out;
    if (record.resources.size() < batch_size) return out;
    Rng rng(derive_seed(seed, "batches:" + record.patient_id));
    out.reserve(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        ResourceBatch batch{record.patient_id, b, {}};
        batch.resources.reserve(batch_size);
        for (auto i : rng.sample_indices(record.resources.size(), batch_size)) {
            batch.resources.push_back(record.resources[i]);
        }
        out.push_back(std::move(batch));
    }
    return out;
}

std::vector<Task1Example> parse_task1_reply(const ResourceBatch& batch, std::string_view reply) {
    const Json arr = extract_json_array(reply);
    const std::size_t n = batch.resources.size();
    if (arr.size() != n) {
        throw ValidationError("expected " + std::to_string(n) + " elements, got " + std::to_string(arr.size()));
    }
    std::set<std::string> ids;
    for (const auto& r : batch.resources) ids.insert(r.resource_id);

    std::vector<const Json*> by_resource(n, nullptr);
    std::string query;
    std::size_t relevant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Json& el = arr[i];
        if (!el.is_object()) throw ValidationError("element " + std::to_string(i) + " is not an object");

        std::size_t slot = i;
        if (auto it = el.find("resource"); it != el.end()) {
            if (auto id = element_resource_id(*it, ids)) {
                if (!ids.count(*id)) throw ValidationError("element " + std::to_string(i) + " names unknown resource " + *id);
                slot = static_cast<std::size_t>(
                    std::find_if(batch.resources.begin(), batch.resources.end(),
                                 [&](const CompactResource& r) { return r.resource_id == *id; }) -
                    batch.resources.begin());
            }
        }
        if (by_resource[slot]) throw ValidationError("two elements map to resource " + batch.resources[slot].resource_id);
        by_resource[slot] = &el;

        auto q = el.find("query");
        if (q == el.end() || !q->is_string()) throw ValidationError("element " + std::to_string(i) + " has no query");
        const std::string this_query = trim(q->get<std::string>());
        if (this_query.empty()) throw ValidationError("element " + std::to_string(i) + " has an empty query");
        if (query.empty()) {
            query = this_query;
        } else if (query != this_query) {
            throw ValidationError("elements disagree on the query");
        }

        auto rel = el.find("relevance");
        if (rel == el.end() || !rel->is_string() || !relevance_from_string(rel->get<std::string>())) {
            throw ValidationError("element " + std::to_string(i) + " relevance is not relevant/irrelevant");
        }
        if (*relevance_from_string(rel->get<std::string>()) == RelevanceLabel::relevant) ++relevant;
    }
    if (relevant == 0) throw ValidationError("no resource marked relevant");

    std::vector<Task1Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Json& el = *by_resource[i];
        Task1Example ex;
        ex.resource = batch.resources[i];
        ex.query = query;
        ex.relevance = *relevance_from_string(el.at("relevance").get<std::string>());
        ex.patient_id = batch.patient_id;
        std::string label;
        if (auto it = el.find("resource_label"); it != el.end() && it->is_string()) label = trim(it->get<std::string>());
        ex.resource_label = label.empty() ? batch.resources[i].label : label;
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<Task1Example> generate_task1_batch(const ResourceBatch& batch, ModelClient& client,
                                               const EndpointConfig& endpoint, const GenerationOptions& options) {
    const Messages prompt = render_datagen_prompt(batch);
    std::string last_raw;
    std::string last_error = "no attempts";
    const int budget = std::max(1, options.retry_budget);
    for (int attempt = 0; attempt < budget; ++attempt) {
        last_raw = client.complete(endpoint, prompt,
                                   CallOptions{options.query_decode, static_cast<std::size_t>(attempt)});
        try {
            return parse_task1_reply(batch, last_raw);
        } catch (const ValidationError& e) {
            last_error = e.what();
        }
    }
    throw BatchGenerationError("patient " + batch.patient_id + " batch " + std::to_string(batch.batch_index) +
                                   ": invalid reply after " + std::to_string(budget) + " attempts: " + last_error,
                               last_raw);
}

Json to_json(const QuarantineRecord& q) {
    return Json{{"kind", q.kind},   {"patient_id", q.patient_id}, {"index", q.index},
                {"query", q.query}, {"error", q.error},           {"last_raw", q.last_raw}};
}

Json summary_json(const Task1BuildResult& r) {
    return Json{{"examples", r.examples.size()},
                {"batches", r.batches},
                {"skipped_patients", r.skipped_patients},
                {"quarantined", r.quarantine.size()},
                {"duplicate_queries", r.duplicate_queries}};
}

Task1BuildResult build_task1_dataset(std::span<const PatientRecord> corpus, ModelClient& client,
                                     const EndpointConfig& endpoint, const GenerationOptions& options) {
    if (corpus.empty()) throw ValidationError("corpus is empty");
    Task1BuildResult result;
    std::vector<ResourceBatch> batches;
    for (const auto& record : corpus) {
        auto b = sample_batches(record, options.n_batches, options.batch_size, options.seed);
        if (b.empty() && options.n_batches > 0) {
            result.skipped_patients.push_back(record.patient_id);
            continue;
        }
        std::move(b.begin(), b.end(), std::back_inserter(batches));
    }
    result.batches = batches.size();

    std::vector<std::vector<Task1Example>> generated(batches.size());
    std::vector<std::optional<QuarantineRecord>> failed(batches.size());
    parallel_for(batches.size(), options.concurrency, [&](std::size_t i) {
        try {
            generated[i] = generate_task1_batch(batches[i], client, endpoint, options);
        } catch (const BatchGenerationError& e) {
            if (options.on_failure == FailurePolicy::abort) throw;
            failed[i] = quarantine_from(e, "task1_batch", batches[i].patient_id, batches[i].batch_index, "");
        }
    });

    std::map<std::string, std::set<std::string>> queries_by_patient;
    for (std::size_t i = 0; i < batches.size(); ++i) {
        if (failed[i]) {
            result.quarantine.push_back(std::move(*failed[i]));
            continue;
        }
        if (!generated[i].empty() &&
            !queries_by_patient[batches[i].patient_id].insert(generated[i].front().query).second) {
            ++result.duplicate_queries;
        }
        std::move(generated[i].begin(), generated[i].end(), std::back_inserter(result.examples));
    }
    return result;
}

Task2Derivation derive_task2_inputs(std::span<const Task1Example> task1) {
    Task2Derivation out;
    std::map<std::string, std::size_t> index;
    std::vector<bool> has_relevant;
    std::vector<Task2Input> groups;
    for (const auto& ex : task1) {
        const auto key = group_key(ex.patient_id, ex.query);
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) {
            groups.push_back(Task2Input{ex.query, {}, ex.patient_id});
            has_relevant.push_back(false);
        }
        if (ex.relevance == RelevanceLabel::relevant) {
            groups[it->second].relevant_resources.push_back(ex.resource);
            has_relevant[it->second] = true;
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (has_relevant[g]) {
            out.inputs.push_back(std::move(groups[g]));
        } else {
            ++out.excluded_groups;
        }
    }
    return out;
}

Task2Example generate_task2_answer(const Task2Input& input, ModelClient& client, const EndpointConfig& endpoint,
                                   const GenerationOptions& options) {
    const Messages prompt = render_task2_prompt(input.query, input.relevant_resources);
    std::string last_raw;
    const int budget = std::max(1, options.retry_budget);
    for (int attempt = 0; attempt < budget; ++attempt) {
        last_raw = client.complete(endpoint, prompt,
                                   CallOptions{options.answer_decode, static_cast<std::size_t>(attempt)});
        std::string answer = trim(last_raw);
        if (!answer.empty()) return Task2Example{input.query, input.relevant_resources, std::move(answer), input.patient_id};
    }
    throw BatchGenerationError("patient " + input.patient_id + " query \"" + input.query + "\": empty answer after " +
                                   std::to_string(budget) + " attempts",
                               last_raw);
}

Task2BuildResult generate_task2_answers(std::span<const Task2Input> inputs, ModelClient& client,
                                        const EndpointConfig& endpoint, const GenerationOptions& options) {
    std::vector<std::optional<Task2Example>> answers(inputs.size());
    std::vector<std::optional<QuarantineRecord>> failed(inputs.size());
    parallel_for(inputs.size(), options.concurrency, [&](std::size_t i) {
        try {
            answers[i] = generate_task2_answer(inputs[i], client, endpoint, options);
        } catch (const BatchGenerationError& e) {
            if (options.on_failure == FailurePolicy::abort) throw;
            failed[i] = quarantine_from(e, "task2_answer", inputs[i].patient_id, i, inputs[i].query);
        }
    });
    Task2BuildResult out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (answers[i]) out.examples.push_back(std::move(*answers[i]));
        if (failed[i]) out.quarantine.push_back(std::move(*failed[i]));
    }
    return out;
}

DatasetSplit<Task1Example> split_by_query(std::span<const Task1Example> items, double test_fraction,
                                          std::uint64_t seed) {
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto [it, inserted] = index.try_emplace(group_key(items[i].patient_id, items[i].query), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return split_groups(items, groups, test_fraction, seed);
}

}  // namespace fhirqa
