#include "fhirqa/experiment.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "fhirqa/clock.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/hashing.hpp"

namespace fhirqa {

std::string_view to_string(TaskKind t) {
    switch (t) {
        case TaskKind::task1: return "task1";
        case TaskKind::task2: return "task2";
        case TaskKind::judge: return "judge";
    }
    return "task1";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
    if (s == "task1") return TaskKind::task1;
    if (s == "task2") return TaskKind::task2;
    if (s == "judge") return TaskKind::judge;
    return std::nullopt;
}

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
    try {
        ExperimentConfig c;
        c.source = j;
        c.name = j.at("name").get<std::string>();
        if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
            throw ValidationError("experiment name must be non-empty and contain no path separators");
        }
        const auto task = task_kind_from_string(j.at("task").get<std::string>());
        if (!task) throw ValidationError(c.name + ": task must be task1, task2 or judge");
        c.task = *task;
        c.endpoints = j.at("endpoints").get<std::vector<std::string>>();
        c.testset = j.at("testset").get<std::string>();
        if (c.testset.is_relative() && !base_dir.empty()) c.testset = base_dir / c.testset;
        if (auto it = j.find("variant"); it != j.end()) {
            const auto v = prompt_variant_from_string(it->get<std::string>());
            if (!v) throw ValidationError(c.name + ": unknown variant");
            c.variant = *v;
        }
        c.seed = j.value("seed", std::uint64_t{0});
        if (auto it = j.find("parse_policy"); it != j.end()) {
            const auto p = parse_policy_from_string(it->get<std::string>());
            if (!p) throw ValidationError(c.name + ": parse_policy must be wrong or retry");
            c.parse_policy = *p;
        }
        if (auto it = j.find("fallback_policy"); it != j.end()) {
            const auto p = fallback_policy_from_string(it->get<std::string>());
            if (!p) throw ValidationError(c.name + ": fallback_policy must be refuse or answer-anyway");
            c.fallback = *p;
        }
        if (auto it = j.find("decode"); it != j.end()) c.decode = decode_params_from_json(*it);
        if (auto it = j.find("protocol"); it != j.end()) {
            const auto p = protocol_from_string(it->get<std::string>());
            if (!p) throw ValidationError(c.name + ": protocol must be blind or disclosed");
            c.protocol = *p;
        }
        c.self_system = j.value("self", "");
        c.concurrency = j.value("concurrency", std::size_t{4});
        return c;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad experiment config: ") + e.what());
    }
}

std::vector<ExperimentConfig> load_experiments(const std::filesystem::path& path) {
    const Json root = parse_json(read_file(path));
    if (!root.is_object() || !root.contains("experiments") || !root["experiments"].is_array()) {
        throw SchemaError(path.string() + ": expected {\"experiments\": [...]}");
    }
    std::vector<ExperimentConfig> out;
    std::set<std::string> names;
    for (const auto& e : root["experiments"]) {
        auto c = experiment_from_json(e, path.parent_path());
        if (!names.insert(c.name).second) throw ValidationError(path.string() + ": duplicate experiment " + c.name);
        out.push_back(std::move(c));
    }
    return out;
}

const ExperimentConfig& find_experiment(std::span<const ExperimentConfig> experiments, std::string_view name) {
    for (const auto& e : experiments) {
        if (e.name == name) return e;
    }
    throw ValidationError("no experiment named \"" + std::string(name) + "\"");
}

void validate_experiment(const ExperimentConfig& config, const EndpointRegistry& registry) {
    if (config.endpoints.empty()) throw ValidationError(config.name + ": no endpoints listed");
    for (const auto& e : config.endpoints) registry.at(e);
    std::set<std::string> unique(config.endpoints.begin(), config.endpoints.end());
    if (unique.size() != config.endpoints.size()) throw ValidationError(config.name + ": endpoint listed twice");
    if (!std::filesystem::is_regular_file(config.testset)) {
        throw ValidationError(config.name + ": testset " + config.testset.string() + " does not exist");
    }
    if (config.task == TaskKind::task1 && config.variant != PromptVariant::task1_standard &&
        config.variant != PromptVariant::task1_extended) {
        throw ValidationError(config.name + ": task1 runs need the standard or extended variant");
    }
}

std::string experiment_hash(const ExperimentConfig& config, const EndpointRegistry& registry) {
    Json endpoints = Json::array();
    for (const auto& e : config.endpoints) endpoints.push_back(to_json(registry.at(e)));
    const Json material{{"experiment", config.source},
                        {"endpoints", std::move(endpoints)},
                        {"testset_sha256", sha256_hex(read_file(config.testset))}};
    return sha256_hex(to_line(material));
}

namespace {

Json to_json(const EndpointResult& r) {
    Json j{{"endpoint", r.endpoint}, {"ok", r.ok}, {"metrics", r.metrics}, {"artifacts", r.artifacts}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

EndpointResult endpoint_result_from_json(const Json& j) {
    EndpointResult r;
    r.endpoint = j.at("endpoint").get<std::string>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.value("error", "");
    r.metrics = j.value("metrics", Json());
    r.artifacts = j.value("artifacts", std::vector<std::string>{});
    return r;
}

EndpointResult run_endpoint(const ExperimentConfig& config, const EndpointConfig& endpoint, ModelClient& client,
                            const std::filesystem::path& artifact_dir) {
    EndpointResult r;
    r.endpoint = endpoint.name;
    PipelineOptions options;
    options.variant = config.variant;
    options.parse_policy = config.parse_policy;
    options.fallback = config.fallback;
    options.concurrency = config.concurrency;
    if (config.decode) {
        options.classify_decode = config.decode;
        options.answer_decode = config.decode;
    }
    switch (config.task) {
        case TaskKind::task1: {
            const auto testset = read_task1_dataset(config.testset);
            const auto eval = evaluate_task1(client, endpoint, testset, options);
            const auto path = artifact_dir / (endpoint.name + ".predictions.jsonl");
            write_json_lines(path, to_json_rows(eval.predictions));
            r.metrics = to_json(eval.report);
            r.metrics["unparseable"] = eval.unparseable;
            r.artifacts.push_back(path.string());
            break;
        }
        case TaskKind::task2: {
            const auto testset = read_task2_dataset(config.testset);
            const auto eval = evaluate_task2(client, endpoint, testset, options);
            const auto path = artifact_dir / (endpoint.name + ".answers.jsonl");
            write_json_lines(path, to_json_rows(eval.answers));
            r.metrics = to_json(eval.report);
            r.artifacts.push_back(path.string());
            break;
        }
        case TaskKind::judge: {
            const auto sets = read_candidates(config.testset);
            const auto items = make_judge_items(sets, config.seed);
            const auto verdicts = judge_items(client, endpoint, items, config.protocol, config.concurrency);
            const auto path = artifact_dir / (endpoint.name + "." + std::string(to_string(config.protocol)) + ".verdicts.jsonl");
            write_json_lines(path, to_json_rows(verdicts));
            r.metrics = to_json(aggregate(verdicts));
            if (!config.self_system.empty()) r.metrics["self"] = config.self_system;
            r.artifacts.push_back(path.string());
            break;
        }
    }
    r.ok = true;
    return r;
}

}  // namespace

Json to_json(const RunRecord& r) {
    Json results = Json::array();
    for (const auto& e : r.results) results.push_back(to_json(e));
    Json j{{"name", r.name},
           {"task", std::string(to_string(r.task))},
           {"config_hash", r.config_hash},
           {"started", r.started},
           {"finished", r.finished},
           {"status", r.status},
           {"testset", r.testset},
           {"variant", r.variant},
           {"results", std::move(results)},
           {"config", r.config}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

RunRecord run_record_from_json(const Json& j) {
    try {
        RunRecord r;
        r.name = j.at("name").get<std::string>();
        const auto task = task_kind_from_string(j.at("task").get<std::string>());
        if (!task) throw SchemaError("unknown task");
        r.task = *task;
        r.config_hash = j.at("config_hash").get<std::string>();
        r.started = j.value("started", "");
        r.finished = j.value("finished", "");
        r.status = j.at("status").get<std::string>();
        r.error = j.value("error", "");
        r.testset = j.value("testset", "");
        r.variant = j.value("variant", "");
        for (const auto& e : j.at("results")) r.results.push_back(endpoint_result_from_json(e));
        r.config = j.value("config", Json::object());
        return r;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad run record: ") + e.what());
    }
}

RunRecord run_experiment(const ExperimentConfig& config, const EndpointRegistry& registry, ModelClient& client,
                         const std::filesystem::path& runs_dir) {
    validate_experiment(config, registry);
    RunRecord record;
    record.name = config.name;
    record.task = config.task;
    record.config_hash = experiment_hash(config, registry);
    record.testset = config.testset.string();
    record.variant = config.task == TaskKind::task1 ? std::string(to_string(config.variant)) : "";
    record.config = config.source;
    record.started = utc_timestamp();
    record.status = "ok";

    const auto artifact_dir = runs_dir / config.name;
    for (const auto& name : config.endpoints) {
        try {
            record.results.push_back(run_endpoint(config, registry.at(name), client, artifact_dir));
        } catch (const Error& e) {
            EndpointResult failed;
            failed.endpoint = name;
            failed.error = e.what();
            record.results.push_back(std::move(failed));
            record.status = "failed";
            record.error = "endpoint " + name + ": " + e.what();
            break;
        }
    }
    record.finished = utc_timestamp();
    write_file(runs_dir / (config.name + ".json"), to_json(record).dump(2) + "\n");
    return record;
}

std::vector<RunRecord> read_run_records(const std::filesystem::path& runs_dir) {
    if (!std::filesystem::is_directory(runs_dir)) throw IoError(runs_dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunRecord> out;
    for (const auto& f : files) {
        try {
            out.push_back(run_record_from_json(parse_json(read_file(f))));
        } catch (const Error& e) {
            throw SchemaError(f.string() + ": " + e.what());
        }
    }
    return out;
}

std::optional<ReportFormat> report_format_from_string(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    return std::nullopt;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_field(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

}  // namespace

std::string emit_report(std::span<const RunRecord> records, ReportFormat format) {
    if (records.empty()) throw ValidationError("no run records to report");
    const TaskKind task = records.front().task;
    for (const auto& r : records) {
        if (r.task != task) throw ValidationError("cannot mix task kinds in one report");
    }

    std::vector<std::string> header;
    std::size_t text_columns = 3;
    // Sort key columns (endpoint, dataset, run) come first in each row.
    std::vector<std::vector<std::string>> rows;
    switch (task) {
        case TaskKind::task1:
            header = {"Endpoint", "Dataset", "Run", "Variant", "Accuracy", "Precision", "Recall", "F1"};
            text_columns = 4;
            break;
        case TaskKind::task2: header = {"Endpoint", "Dataset", "Run", "METEOR"}; break;
        case TaskKind::judge:
            header = {"Endpoint", "Dataset", "Run", "Protocol", "System", "Wins", "Win rate (decided)", "Win rate (all)"};
            text_columns = 5;
            break;
    }
    for (const auto& r : records) {
        const std::string dataset = std::filesystem::path(r.testset).filename().string();
        for (const auto& e : r.results) {
            if (!e.ok) continue;
            const Json& m = e.metrics;
            switch (task) {
                case TaskKind::task1:
                    rows.push_back({e.endpoint, dataset, r.name, r.variant, fixed(100 * m.at("accuracy").get<double>(), 2),
                                    fixed(100 * m.at("precision").get<double>(), 2),
                                    fixed(100 * m.at("recall").get<double>(), 2), fixed(100 * m.at("f1").get<double>(), 2)});
                    break;
                case TaskKind::task2:
                    rows.push_back({e.endpoint, dataset, r.name, fixed(m.at("mean").get<double>(), 4)});
                    break;
                case TaskKind::judge:
                    for (const auto& [system, t] : m.at("systems").items()) {
                        rows.push_back({e.endpoint, dataset, r.name, m.at("protocol").get<std::string>(), system,
                                        std::to_string(t.at("wins").get<std::size_t>()),
                                        fixed(t.at("win_rate_pct").get<double>(), 2),
                                        fixed(t.value("win_rate_total_pct", 0.0), 2)});
                    }
                    break;
            }
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a[0], a[1], a[2]) < std::tie(b[0], b[1], b[2]);
    });

    std::ostringstream out;
    if (format == ReportFormat::csv) {
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_field(header[i]);
        out << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
            out << "\n";
        }
    } else {
        out << "|";
        for (const auto& h : header) out << " " << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < header.size(); ++i) out << (i < text_columns ? "---|" : "---:|");
        out << "\n";
        for (const auto& row : rows) {
            out << "|";
            for (const auto& c : row) out << " " << md_field(c) << " |";
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace fhirqa
