#include <iostream>

#include "context.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/experiment.hpp"

namespace fhirqa::cli {

void add_experiment_commands(CLI::App& app, Context& ctx) {
    {
        auto* cmd = app.add_subcommand("run", "Run a named experiment from a config file");
        auto config = std::make_shared<std::string>();
        auto name = std::make_shared<std::string>();
        auto runs = std::make_shared<std::string>("runs");
        cmd->add_option("--config", *config, "Experiments file")->required();
        cmd->add_option("--name", *name, "Experiment name")->required();
        cmd->add_option("--runs", *runs, "Directory for run records")->capture_default_str();
        cmd->callback([=, &ctx] {
            const auto experiments = load_experiments(*config);
            const auto& exp = find_experiment(experiments, *name);
            std::filesystem::create_directories(*runs);
            const auto record = run_experiment(exp, ctx.registry(), ctx.client(), *runs);
            print_json(to_json(record));
            if (record.status != "ok") throw PipelineError(record.error);
        });
    }
    {
        auto* cmd = app.add_subcommand("report", "Tabulate run records");
        auto runs = std::make_shared<std::string>("runs");
        auto format = std::make_shared<std::string>("markdown");
        cmd->add_option("--runs", *runs, "Directory of run records")->capture_default_str();
        cmd->add_option("--format", *format, "csv or markdown")
            ->check(CLI::IsMember({"csv", "markdown"}))
            ->capture_default_str();
        cmd->callback([=] {
            std::cout << emit_report(read_run_records(*runs), *report_format_from_string(*format));
        });
    }
}

}  // namespace fhirqa::cli
