#include <exception>
#include <iostream>

#include "context.hpp"
#include "fhirqa/error.hpp"

int main(int argc, char** argv) {
    using namespace fhirqa::cli;
    CLI::App app{"Patient-record question answering over FHIR: datasets, evaluation and judging"};
    app.name("fhirqa");
    app.require_subcommand(1);
    app.set_version_flag("--version", "fhirqa 0.1.0");

    Context ctx;
    app.add_option("--endpoints", ctx.endpoints_path, "Endpoint config file")->capture_default_str();
    app.add_option("--cache", ctx.cache_path, "Response cache (JSON Lines); in-memory when omitted");
    app.add_option("--cache-mode", ctx.cache_mode, "off, read_write or read_only")
        ->check(CLI::IsMember({"off", "read_write", "read_only", "read-write", "read-only"}))
        ->capture_default_str();

    add_data_commands(app, ctx);
    add_eval_commands(app, ctx);
    add_judge_commands(app, ctx);
    add_experiment_commands(app, ctx);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const fhirqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
