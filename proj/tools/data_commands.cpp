#include "context.hpp"
#include "fhirqa/dataset.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"
#include "fhirqa/synthetic.hpp"

namespace fhirqa::cli {
namespace {

namespace fs = std::filesystem;

FailurePolicy failure_policy(const std::string& s) {
    return s == "quarantine" ? FailurePolicy::quarantine : FailurePolicy::abort;
}

std::vector<Json> rows_of(const std::vector<QuarantineRecord>& q) {
    std::vector<Json> out;
    for (const auto& r : q) out.push_back(to_json(r));
    return out;
}

void write_manifest(Context& ctx, const fs::path& out) {
    std::vector<Json> rows;
    for (const auto& e : ctx.client().manifest()) rows.push_back(to_json(e));
    write_rows(out / "manifest.jsonl", rows);
}

enum class DatasetKind { task1, task2 };

DatasetKind detect_kind(const std::vector<Json>& rows, const fs::path& path) {
    if (rows.empty()) throw ValidationError(path.string() + " is empty");
    if (rows.front().contains("relevance")) return DatasetKind::task1;
    if (rows.front().contains("answer")) return DatasetKind::task2;
    throw SchemaError(path.string() + " is neither a task 1 nor a task 2 dataset");
}

template <typename T>
std::vector<Json> rows_of(const std::vector<T>& items) {
    return to_json_rows(items);
}

}  // namespace

void add_data_commands(CLI::App& app, Context& ctx) {
    // ingest
    {
        auto* cmd = app.add_subcommand("ingest", "Compact a directory of FHIR bundles into a corpus file");
        auto bundles = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rules = std::make_shared<std::string>();
        auto threads = std::make_shared<std::size_t>(0);
        cmd->add_option("--bundles", *bundles, "Directory of *.json patient bundles")->required();
        cmd->add_option("--out", *out, "Corpus file (JSON Lines, one patient per line)")->required();
        cmd->add_option("--rules", *rules, "Retention ruleset; the shipped default when omitted");
        cmd->add_option("--threads", *threads, "Parser threads (0: hardware concurrency)");
        cmd->callback([=] {
            const auto ruleset = rules->empty() ? RetentionRuleset::default_rules() : RetentionRuleset::load(*rules);
            const auto corpus = load_corpus(*bundles, ruleset, *threads);
            if (fs::path(*out).has_parent_path()) fs::create_directories(fs::path(*out).parent_path());
            write_corpus(*out, corpus.records);
            print_json(to_json(corpus.summary));
        });
    }

    // synth-corpus
    {
        auto* cmd = app.add_subcommand("synth-corpus", "Write synthetic Synthea-shaped patient bundles");
        auto out = std::make_shared<std::string>();
        auto o = std::make_shared<SyntheticCorpusOptions>();
        auto clean = std::make_shared<bool>(false);
        cmd->add_option("--out", *out, "Output directory")->required();
        cmd->add_option("--patients", o->patients, "Number of patients")->capture_default_str();
        cmd->add_option("--seed", o->seed, "Generator seed")->capture_default_str();
        cmd->add_option("--min-resources", o->min_resources)->capture_default_str();
        cmd->add_option("--max-resources", o->max_resources)->capture_default_str();
        cmd->add_flag("--clean", *clean, "Omit unsupported and unlinked entries");
        cmd->callback([=] {
            auto opts = *o;
            opts.noise = !*clean;
            const auto files = write_synthetic_corpus(*out, opts);
            print_json(Json{{"directory", *out}, {"files", files.size()}});
        });
    }

    // gen-dataset
    {
        auto* cmd = app.add_subcommand("gen-dataset", "Generate the task 1 or task 2 dataset with a generator endpoint");
        auto task = std::make_shared<int>(1);
        auto corpus = std::make_shared<std::string>();
        auto endpoint = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto o = std::make_shared<GenerationOptions>();
        auto on_failure = std::make_shared<std::string>("abort");
        cmd->add_option("--task", *task, "1: query/relevance rows from a corpus; 2: answers from a task 1 dataset")
            ->check(CLI::IsMember({1, 2}))
            ->required();
        cmd->add_option("--corpus,--from", *corpus, "Corpus file (task 1) or task 1 dataset (task 2)")->required();
        cmd->add_option("--endpoint", *endpoint, "Generator endpoint name")->required();
        cmd->add_option("--seed", o->seed, "Batch sampling seed")->capture_default_str();
        cmd->add_option("--out", *out, "Output directory")->required();
        cmd->add_option("--batches", o->n_batches, "Batches per patient")->capture_default_str();
        cmd->add_option("--batch-size", o->batch_size, "Resources per batch")->capture_default_str();
        cmd->add_option("--retry-budget", o->retry_budget, "Attempts per batch or answer")->capture_default_str();
        cmd->add_option("--on-failure", *on_failure, "abort or quarantine")
            ->check(CLI::IsMember({"abort", "quarantine"}))
            ->capture_default_str();
        cmd->add_option("--concurrency", o->concurrency, "Concurrent generation calls")->capture_default_str();
        cmd->callback([=, &ctx] {
            auto opts = *o;
            opts.on_failure = failure_policy(*on_failure);
            const auto& ep = ctx.endpoint(*endpoint);
            const fs::path dir(*out);
            fs::create_directories(dir);
            if (*task == 1) {
                const auto records = read_corpus(*corpus);
                Task1BuildResult result;
                try {
                    result = build_task1_dataset(records, ctx.client(), ep, opts);
                } catch (...) {
                    write_manifest(ctx, dir);
                    throw;
                }
                write_rows(dir / "task1.jsonl", rows_of(result.examples));
                write_rows(dir / "quarantine.jsonl", rows_of(result.quarantine));
                write_manifest(ctx, dir);
                const Json summary = summary_json(result);
                write_output(dir / "task1.summary.json", summary.dump(2) + "\n");
                print_json(summary);
            } else {
                const auto task1 = read_task1_dataset(*corpus);
                const auto derived = derive_task2_inputs(task1);
                Task2BuildResult result;
                try {
                    result = generate_task2_answers(derived.inputs, ctx.client(), ep, opts);
                } catch (...) {
                    write_manifest(ctx, dir);
                    throw;
                }
                write_rows(dir / "task2.jsonl", rows_of(result.examples));
                write_rows(dir / "quarantine.jsonl", rows_of(result.quarantine));
                write_manifest(ctx, dir);
                const Json summary{{"examples", result.examples.size()},
                                   {"inputs", derived.inputs.size()},
                                   {"excluded_groups", derived.excluded_groups},
                                   {"quarantined", result.quarantine.size()}};
                write_output(dir / "task2.summary.json", summary.dump(2) + "\n");
                print_json(summary);
            }
        });
    }

    // split
    {
        auto* cmd = app.add_subcommand("split", "Split a dataset into train and test files");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto frac = std::make_shared<double>(0.05);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto grouped = std::make_shared<bool>(true);
        cmd->add_option("--in", *in, "Task 1 or task 2 dataset")->required();
        cmd->add_option("--out", *out, "Output directory; defaults to the input's directory");
        cmd->add_option("--test-frac", *frac, "Fraction sent to the test side")->capture_default_str();
        cmd->add_option("--seed", *seed, "Split seed")->capture_default_str();
        cmd->add_flag("--group-by-query,!--no-group-by-query", *grouped,
                      "Keep each (patient, query) group on one side (task 1 only; default on)");
        cmd->callback([=] {
            const fs::path path(*in);
            const auto rows = read_json_lines(path);
            const fs::path dir = out->empty() ? path.parent_path() : fs::path(*out);
            const std::string stem = path.stem().string();
            std::size_t train = 0, test = 0;
            if (detect_kind(rows, path) == DatasetKind::task1) {
                std::vector<Task1Example> items;
                for (const auto& r : rows) items.push_back(task1_example_from_json(r));
                const auto s = *grouped ? split_by_query(items, *frac, *seed)
                                        : split(std::span<const Task1Example>(items), *frac, *seed);
                write_rows(dir / (stem + ".train.jsonl"), rows_of(s.train));
                write_rows(dir / (stem + ".test.jsonl"), rows_of(s.test));
                train = s.train.size();
                test = s.test.size();
            } else {
                std::vector<Task2Example> items;
                for (const auto& r : rows) items.push_back(task2_example_from_json(r));
                const auto s = split(std::span<const Task2Example>(items), *frac, *seed);
                write_rows(dir / (stem + ".train.jsonl"), rows_of(s.train));
                write_rows(dir / (stem + ".test.jsonl"), rows_of(s.test));
                train = s.train.size();
                test = s.test.size();
            }
            print_json(Json{{"train", train},
                            {"test", test},
                            {"train_file", (dir / (stem + ".train.jsonl")).string()},
                            {"test_file", (dir / (stem + ".test.jsonl")).string()}});
        });
    }

    // subsample
    {
        auto* cmd = app.add_subcommand("subsample", "Sample n rows of a training file without replacement");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto n = std::make_shared<std::size_t>(500);
        auto seed = std::make_shared<std::uint64_t>(0);
        cmd->add_option("--in", *in, "Training file")->required();
        cmd->add_option("--out", *out, "Output file")->required();
        cmd->add_option("--n", *n, "Rows to keep")->capture_default_str();
        cmd->add_option("--seed", *seed, "Sampling seed")->capture_default_str();
        cmd->callback([=] {
            const auto rows = read_json_lines(*in);
            detect_kind(rows, *in);
            const auto picked = subsample(std::span<const Json>(rows), *n, *seed);
            write_rows(*out, picked);
            print_json(Json{{"rows", picked.size()}, {"out", *out}});
        });
    }
}

}  // namespace fhirqa::cli
