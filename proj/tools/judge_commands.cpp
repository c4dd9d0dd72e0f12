#include <cstdio>
#include <iostream>

#include "context.hpp"
#include "fhirqa/error.hpp"
#include "fhirqa/judge.hpp"

namespace fhirqa::cli {
namespace {

namespace fs = std::filesystem;

/// A WinRateReport JSON file, or a verdicts JSON Lines file aggregated on the fly.
WinRateReport load_report(const fs::path& path) {
    if (path.extension() == ".jsonl") {
        std::vector<Verdict> verdicts;
        for (const auto& j : read_json_lines(path)) verdicts.push_back(verdict_from_json(j));
        return aggregate(verdicts);
    }
    return win_rate_report_from_json(parse_json(read_file(path)));
}

}  // namespace

void add_judge_commands(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("judge", "Pairwise LLM-as-judge comparison of candidate answers");
    auto judge = std::make_shared<std::string>();
    auto protocol = std::make_shared<std::string>("blind");
    auto self = std::make_shared<std::string>();
    auto pairs = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    auto report_out = std::make_shared<std::string>();
    auto concurrency = std::make_shared<std::size_t>(4);
    cmd->add_option("--judge", *judge, "Judge endpoint");
    cmd->add_option("--protocol", *protocol, "blind or disclosed")
        ->check(CLI::IsMember({"blind", "disclosed"}))
        ->capture_default_str();
    cmd->add_option("--self", *self, "System produced by the judge's own model family (recorded in the report)");
    cmd->add_option("--pairs", *pairs, "Candidates file: {item_id, query, reference_answer, answers}");
    cmd->add_option("--seed", *seed, "Presentation-order seed")->capture_default_str();
    cmd->add_option("--out", *out, "Verdicts file (JSON Lines)");
    cmd->add_option("--report", *report_out, "Write the WinRateReport JSON here as well");
    cmd->add_option("--concurrency", *concurrency)->capture_default_str();

    auto* report = cmd->add_subcommand("report", "Win-rate table and self-preference delta from two runs");
    auto blind = std::make_shared<std::string>();
    auto disclosed = std::make_shared<std::string>();
    auto report_self = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("markdown");
    report->add_option("--blind", *blind, "Blind WinRateReport (.json) or verdicts (.jsonl)")->required();
    report->add_option("--disclosed", *disclosed, "Disclosed WinRateReport (.json) or verdicts (.jsonl)")->required();
    report->add_option("--self", *report_self, "The judge's own system")->required();
    report->add_option("--format", *format, "markdown or json")
        ->check(CLI::IsMember({"markdown", "json"}))
        ->capture_default_str();
    report->callback([=] {
        const auto b = load_report(*blind);
        const auto d = load_report(*disclosed);
        const double delta = bias_delta(b, d, *report_self);
        std::string other;
        for (const auto& [name, _] : b.systems) {
            if (name != *report_self) other = name;
        }
        if (*format == "json") {
            print_json(Json{{"blind", to_json(b)},
                            {"disclosed", to_json(d)},
                            {"self", *report_self},
                            {"other", other},
                            {"bias_delta", delta}});
            return;
        }
        std::cout << render_win_rate_markdown(std::vector<WinRateReport>{b, d});
        char buf[160];
        std::snprintf(buf, sizeof buf, "\nWin rate of %s, blind minus disclosed: %+.2f points\n", other.c_str(), delta);
        std::cout << buf;
    });

    cmd->callback([=, &ctx] {
        if (cmd->got_subcommand(report)) return;
        if (judge->empty() || pairs->empty()) throw ValidationError("judge needs --judge and --pairs");
        const auto sets = read_candidates(*pairs);
        const auto items = make_judge_items(sets, *seed);
        const auto p = *protocol_from_string(*protocol);
        const auto verdicts = judge_items(ctx.client(), ctx.endpoint(*judge), items, p, *concurrency);
        if (!out->empty()) write_rows(*out, to_json_rows(verdicts));
        Json j = to_json(aggregate(verdicts));
        if (!self->empty()) j["self"] = *self;
        if (!report_out->empty()) write_output(*report_out, j.dump(2) + "\n");
        print_json(j);
    });
}

}  // namespace fhirqa::cli
