#include "context.hpp"
#include "fhirqa/classification.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"
#include "fhirqa/meteor.hpp"
#include "fhirqa/pipeline.hpp"

namespace fhirqa::cli {
namespace {

namespace fs = std::filesystem;

PromptVariant variant_of(const std::string& s) {
    const auto v = prompt_variant_from_string(s);
    if (!v || (*v != PromptVariant::task1_standard && *v != PromptVariant::task1_extended)) {
        throw ValidationError("--variant must be standard or extended");
    }
    return *v;
}

MeteorConfig meteor_config(const std::string& stages, const std::string& lexicon) {
    MeteorConfig c;
    c.stages = parse_stages(stages);
    if (!lexicon.empty()) c.with_lexicon_file(lexicon);
    c.validate();
    return c;
}

/// A patient record from a corpus file (selected by --patient when it holds
/// several) or from a single FHIR bundle.
PatientRecord load_record(const fs::path& path, const std::string& patient) {
    if (path.extension() == ".json") {
        CorpusSummary summary;
        return ingest_bundle(read_file(path), RetentionRuleset::default_rules(), path.stem().string(), summary);
    }
    const auto records = read_corpus(path);
    if (patient.empty()) {
        if (records.size() != 1) {
            throw ValidationError(path.string() + " holds " + std::to_string(records.size()) +
                                  " patients; pick one with --patient");
        }
        return records.front();
    }
    for (const auto& r : records) {
        if (r.patient_id == patient) return r;
    }
    throw ValidationError("patient " + patient + " is not in " + path.string());
}

}  // namespace

void add_eval_commands(CLI::App& app, Context& ctx) {
    // run-task1
    {
        auto* cmd = app.add_subcommand("run-task1", "Evaluate relevance classification on a task 1 test set");
        auto endpoint = std::make_shared<std::string>();
        auto testset = std::make_shared<std::string>();
        auto variant = std::make_shared<std::string>("standard");
        auto policy = std::make_shared<std::string>("wrong");
        auto out = std::make_shared<std::string>();
        auto concurrency = std::make_shared<std::size_t>(4);
        cmd->add_option("--endpoint", *endpoint, "Classifier endpoint")->required();
        cmd->add_option("--testset", *testset, "Task 1 test set")->required();
        cmd->add_option("--variant", *variant, "standard or extended")->capture_default_str();
        cmd->add_option("--policy", *policy, "Unparseable output: wrong or retry")
            ->check(CLI::IsMember({"wrong", "retry"}))
            ->capture_default_str();
        cmd->add_option("--out", *out, "Prediction dump (JSON Lines)");
        cmd->add_option("--concurrency", *concurrency)->capture_default_str();
        cmd->callback([=, &ctx] {
            PipelineOptions o;
            o.variant = variant_of(*variant);
            o.parse_policy = *parse_policy_from_string(*policy);
            o.concurrency = *concurrency;
            const auto data = read_task1_dataset(*testset);
            const auto ev = evaluate_task1(ctx.client(), ctx.endpoint(*endpoint), data, o);
            if (!out->empty()) write_rows(*out, to_json_rows(ev.predictions));
            Json report = to_json(ev.report);
            report["unparseable"] = ev.unparseable;
            print_json(report);
        });
    }

    // run-task2
    {
        auto* cmd = app.add_subcommand("run-task2", "Answer a task 2 test set from gold resources and score with METEOR");
        auto endpoint = std::make_shared<std::string>();
        auto testset = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto stages = std::make_shared<std::string>("exact,stem");
        auto lexicon = std::make_shared<std::string>();
        auto concurrency = std::make_shared<std::size_t>(4);
        cmd->add_option("--endpoint", *endpoint, "Answer endpoint")->required();
        cmd->add_option("--testset", *testset, "Task 2 test set")->required();
        cmd->add_option("--out", *out, "Answer dump (JSON Lines)");
        cmd->add_option("--stages", *stages, "METEOR matching stages")->capture_default_str();
        cmd->add_option("--lexicon", *lexicon, "Synonym lexicon; enables the synonym stage");
        cmd->add_option("--concurrency", *concurrency)->capture_default_str();
        cmd->callback([=, &ctx] {
            PipelineOptions o;
            o.concurrency = *concurrency;
            const auto data = read_task2_dataset(*testset);
            const auto ev = evaluate_task2(ctx.client(), ctx.endpoint(*endpoint), data, o, meteor_config(*stages, *lexicon));
            if (!out->empty()) write_rows(*out, to_json_rows(ev.answers));
            print_json(to_json(ev.report));
        });
    }

    // answer
    {
        auto* cmd = app.add_subcommand("answer", "End-to-end: classify a record's resources, then answer from the relevant ones");
        auto e1 = std::make_shared<std::string>();
        auto e2 = std::make_shared<std::string>();
        auto record = std::make_shared<std::string>();
        auto patient = std::make_shared<std::string>();
        auto query = std::make_shared<std::string>();
        auto variant = std::make_shared<std::string>("standard");
        auto fallback = std::make_shared<std::string>("refuse");
        cmd->add_option("--endpoint1", *e1, "Relevance classifier endpoint")->required();
        cmd->add_option("--endpoint2", *e2, "Answer endpoint")->required();
        cmd->add_option("--record", *record, "Corpus file or a single FHIR bundle (.json)")->required();
        cmd->add_option("--patient", *patient, "Patient id when the corpus holds several");
        cmd->add_option("--query", *query, "Patient question")->required();
        cmd->add_option("--variant", *variant, "standard or extended")->capture_default_str();
        cmd->add_option("--fallback", *fallback, "No relevant resources: refuse or answer-anyway")
            ->check(CLI::IsMember({"refuse", "answer-anyway", "answer_anyway"}))
            ->capture_default_str();
        cmd->callback([=, &ctx] {
            PipelineOptions o;
            o.variant = variant_of(*variant);
            o.fallback = *fallback_policy_from_string(*fallback);
            const auto rec = load_record(*record, *patient);
            print_json(to_json(run_end_to_end(ctx.client(), ctx.endpoint(*e1), ctx.endpoint(*e2), *query, rec, o)));
        });
    }

    // eval
    auto* eval = app.add_subcommand("eval", "Score existing outputs");
    eval->require_subcommand(1);
    {
        auto* cmd = eval->add_subcommand("meteor", "METEOR over {candidate, reference} rows");
        auto pairs = std::make_shared<std::string>();
        auto stages = std::make_shared<std::string>("exact,stem");
        auto lexicon = std::make_shared<std::string>();
        auto aggregate = std::make_shared<bool>(false);
        cmd->add_option("--pairs", *pairs, "JSON Lines with candidate and reference fields")->required();
        cmd->add_option("--stages", *stages, "Matching stages")->capture_default_str();
        cmd->add_option("--lexicon", *lexicon, "Synonym lexicon; enables the synonym stage");
        cmd->add_flag("--aggregate", *aggregate, "Score from summed counts instead of the mean");
        cmd->callback([=] {
            std::vector<std::pair<std::string, std::string>> rows;
            for (const auto& j : read_json_lines(*pairs)) {
                if (!j.contains("candidate") || !j.contains("reference")) {
                    throw SchemaError("each row needs candidate and reference");
                }
                rows.emplace_back(j.at("candidate").get<std::string>(), j.at("reference").get<std::string>());
            }
            print_json(to_json(corpus_meteor(rows, meteor_config(*stages, *lexicon), *aggregate)));
        });
    }
    {
        auto* cmd = eval->add_subcommand("cls", "Classification report over {gold, predicted} rows");
        auto preds = std::make_shared<std::string>();
        cmd->add_option("--preds", *preds, "Prediction dump from run-task1")->required();
        cmd->callback([=] {
            std::vector<PredictionRow> rows;
            for (const auto& j : read_json_lines(*preds)) rows.push_back(prediction_row_from_json(j));
            print_json(to_json(classification_report(count_predictions(rows))));
        });
    }
}

}  // namespace fhirqa::cli
