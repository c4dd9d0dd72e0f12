#include "fhirqa/judge.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "fhirqa/error.hpp"
#include "fhirqa/hashing.hpp"
#include "fhirqa/parallel.hpp"

namespace fhirqa {
namespace {

constexpr std::string_view kJudgeSystem =
    "You are an impartial judge comparing two answers to a patient's question about their own medical record.";

constexpr std::string_view kCriteria =
    "1. Relevance: Does the answer accurately address the patient query using the relevant FHIR resources?\n"
    "2. Groundedness: Is the answer based on factual, evidence-based information?\n"
    "3. Completeness: Does the answer cover all aspects of the patient query comprehensively?\n"
    "4. Quality: Is the answer well-written, clear, and useful for the patient?\n"
    "5. Conciseness: Is the answer succinct while still being informative?\n"
    "6. Closeness to Reference: How closely does the answer match the content and intent of the reference "
    "answer?";

double round2(double x) { return std::round(x * 100.0) / 100.0; }

double pct(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : round2(100.0 * static_cast<double>(num) / static_cast<double>(den));
}

}  // namespace

std::string_view to_string(Protocol p) { return p == Protocol::disclosed ? "disclosed" : "blind"; }
std::string_view to_string(PresentationOrder o) { return o == PresentationOrder::ba ? "ba" : "ab"; }
std::string_view to_string(Winner w) {
    switch (w) {
        case Winner::A: return "A";
        case Winner::B: return "B";
        case Winner::tie: return "tie";
        case Winner::invalid: return "invalid";
    }
    return "invalid";
}

std::optional<Protocol> protocol_from_string(std::string_view s) {
    if (s == "blind") return Protocol::blind;
    if (s == "disclosed") return Protocol::disclosed;
    return std::nullopt;
}

CandidateSet candidate_set_from_json(const Json& j) {
    try {
        CandidateSet c;
        c.item_id = j.at("item_id").is_string() ? j.at("item_id").get<std::string>() : j.at("item_id").dump();
        c.query = j.at("query").get<std::string>();
        c.reference_answer = j.at("reference_answer").get<std::string>();
        for (const auto& [system, text] : j.at("answers").items()) c.answers[system] = text.get<std::string>();
        if (c.item_id.empty()) throw SchemaError("item_id must not be empty");
        return c;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad candidates record: ") + e.what());
    }
}

Json to_json(const CandidateSet& c) {
    return Json{{"item_id", c.item_id}, {"query", c.query}, {"reference_answer", c.reference_answer}, {"answers", c.answers}};
}

std::vector<CandidateSet> read_candidates(const std::filesystem::path& path) {
    std::vector<CandidateSet> out;
    std::set<std::string> ids;
    for (const auto& row : read_json_lines(path)) {
        auto c = candidate_set_from_json(row);
        if (!ids.insert(c.item_id).second) throw SchemaError(path.string() + ": duplicate item_id " + c.item_id);
        out.push_back(std::move(c));
    }
    return out;
}

PresentationOrder presentation_order(std::uint64_t seed, std::string_view item_id) {
    return (derive_seed(seed, item_id) >> 17) & 1 ? PresentationOrder::ba : PresentationOrder::ab;
}

std::vector<JudgeItem> make_judge_items(std::span<const CandidateSet> sets, std::uint64_t seed) {
    std::vector<JudgeItem> out;
    for (const auto& set : sets) {
        if (set.answers.size() < 2) {
            throw ValidationError("item " + set.item_id + " needs answers from at least two systems");
        }
        std::vector<const std::pair<const std::string, std::string>*> systems;
        for (const auto& entry : set.answers) systems.push_back(&entry);
        for (std::size_t x = 0; x < systems.size(); ++x) {
            for (std::size_t y = x + 1; y < systems.size(); ++y) {
                JudgeItem item;
                item.item_id = set.answers.size() == 2
                                   ? set.item_id
                                   : set.item_id + "#" + systems[x]->first + "-vs-" + systems[y]->first;
                item.query = set.query;
                item.reference_answer = set.reference_answer;
                item.a = {systems[x]->first, systems[x]->second};
                item.b = {systems[y]->first, systems[y]->second};
                item.order = presentation_order(seed, item.item_id);
                out.push_back(std::move(item));
            }
        }
    }
    return out;
}

Messages build_judge_prompt(const JudgeItem& item, Protocol protocol) {
    const SystemAnswer& first = item.order == PresentationOrder::ab ? item.a : item.b;
    const SystemAnswer& second = item.order == PresentationOrder::ab ? item.b : item.a;
    auto heading = [&](int n, const SystemAnswer& s) {
        std::string h = "Response " + std::to_string(n);
        if (protocol == Protocol::disclosed) h += " (generated by " + s.system + ")";
        return h + ":\n";
    };
    std::string user;
    user += "Compare the two responses to the patient query below and decide which one is better overall, "
            "using these criteria:\n";
    user += kCriteria;
    user += "\n\nQuery:\n" + item.query;
    user += "\n\nReference answer:\n" + item.reference_answer;
    user += "\n\n" + heading(1, first) + first.text;
    user += "\n\n" + heading(2, second) + second.text;
    user += "\n\nExplain your reasoning briefly, then end with a final line that is exactly one of:\n"
            "WINNER: 1\nWINNER: 2\nWINNER: TIE";
    return {{Role::system, std::string(kJudgeSystem)}, {Role::user, std::move(user)}};
}

std::optional<int> parse_winner_line(std::string_view raw) {
    static const std::regex re(R"(^[\s*_#>]*winner[\s*_]*:[\s*_]*(1|2|tie)\b)", std::regex::icase);
    std::optional<int> result;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw.size();
        const std::string line(raw.substr(pos, nl - pos));
        std::smatch m;
        if (std::regex_search(line, m, re)) {
            const std::string v = m[1].str();
            result = v == "1" ? 1 : v == "2" ? 2 : 0;
        }
        pos = nl + 1;
    }
    return result;
}

std::string Verdict::winner_system() const {
    if (winner == Winner::A) return system_a;
    if (winner == Winner::B) return system_b;
    return {};
}

Json to_json(const Verdict& v) {
    return Json{{"item_id", v.item_id},
                {"winner", std::string(to_string(v.winner))},
                {"winner_system", v.winner_system()},
                {"system_a", v.system_a},
                {"system_b", v.system_b},
                {"presentation_order", std::string(to_string(v.order))},
                {"raw", v.raw},
                {"judge", v.judge},
                {"protocol", std::string(to_string(v.protocol))}};
}

Verdict verdict_from_json(const Json& j) {
    try {
        Verdict v;
        v.item_id = j.at("item_id").get<std::string>();
        const auto w = j.at("winner").get<std::string>();
        if (w == "A") {
            v.winner = Winner::A;
        } else if (w == "B") {
            v.winner = Winner::B;
        } else if (w == "tie") {
            v.winner = Winner::tie;
        } else if (w == "invalid") {
            v.winner = Winner::invalid;
        } else {
            throw SchemaError("unknown winner \"" + w + "\"");
        }
        v.system_a = j.at("system_a").get<std::string>();
        v.system_b = j.at("system_b").get<std::string>();
        v.order = j.value("presentation_order", "ab") == "ba" ? PresentationOrder::ba : PresentationOrder::ab;
        v.raw = j.value("raw", "");
        v.judge = j.at("judge").get<std::string>();
        const auto p = protocol_from_string(j.at("protocol").get<std::string>());
        if (!p) throw SchemaError("unknown protocol");
        v.protocol = *p;
        return v;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad verdict: ") + e.what());
    }
}

Winner resolve_winner(std::optional<int> response, PresentationOrder order) {
    if (!response) return Winner::invalid;
    if (*response == 0) return Winner::tie;
    const bool first = *response == 1;
    return (first == (order == PresentationOrder::ab)) ? Winner::A : Winner::B;
}

Verdict judge_pair(ModelClient& client, const EndpointConfig& judge, const JudgeItem& item, Protocol protocol) {
    if (item.a.system == item.b.system) throw ValidationError("item " + item.item_id + " compares a system with itself");
    Verdict v;
    v.item_id = item.item_id;
    v.system_a = item.a.system;
    v.system_b = item.b.system;
    v.order = item.order;
    v.judge = judge.name;
    v.protocol = protocol;
    v.raw = client.complete(judge, build_judge_prompt(item, protocol));
    v.winner = resolve_winner(parse_winner_line(v.raw), item.order);
    return v;
}

std::vector<Verdict> judge_items(ModelClient& client, const EndpointConfig& judge, std::span<const JudgeItem> items,
                                 Protocol protocol, std::size_t concurrency) {
    std::vector<Verdict> out(items.size());
    parallel_for(items.size(), concurrency, [&](std::size_t i) { out[i] = judge_pair(client, judge, items[i], protocol); });
    return out;
}

Json to_json(const WinRateReport& r) {
    Json systems = Json::object();
    for (const auto& [name, t] : r.systems) {
        systems[name] = Json{{"wins", t.wins}, {"win_rate_pct", t.win_rate_pct}, {"win_rate_total_pct", t.win_rate_total_pct}};
    }
    return Json{{"judge", r.judge},
                {"protocol", std::string(to_string(r.protocol))},
                {"n", r.n},
                {"decided", r.decided},
                {"ties", r.ties},
                {"invalids", r.invalids},
                {"no_decided_items", r.no_decided_items},
                {"item_set_hash", r.item_set_hash},
                {"systems", std::move(systems)}};
}

WinRateReport win_rate_report_from_json(const Json& j) {
    try {
        WinRateReport r;
        r.judge = j.at("judge").get<std::string>();
        const auto p = protocol_from_string(j.at("protocol").get<std::string>());
        if (!p) throw SchemaError("unknown protocol");
        r.protocol = *p;
        r.n = j.at("n").get<std::size_t>();
        r.decided = j.at("decided").get<std::size_t>();
        r.ties = j.at("ties").get<std::size_t>();
        r.invalids = j.at("invalids").get<std::size_t>();
        r.no_decided_items = j.value("no_decided_items", r.decided == 0);
        r.item_set_hash = j.at("item_set_hash").get<std::string>();
        for (const auto& [name, t] : j.at("systems").items()) {
            r.systems[name] = SystemTally{t.at("wins").get<std::size_t>(), t.at("win_rate_pct").get<double>(),
                                          t.value("win_rate_total_pct", 0.0)};
        }
        return r;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad win-rate report: ") + e.what());
    }
}

WinRateReport aggregate(std::span<const Verdict> verdicts) {
    if (verdicts.empty()) throw ValidationError("no verdicts to aggregate");
    std::vector<const Verdict*> sorted;
    for (const auto& v : verdicts) sorted.push_back(&v);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->item_id < y->item_id; });

    WinRateReport r;
    r.judge = sorted.front()->judge;
    r.protocol = sorted.front()->protocol;
    std::string ids;
    for (const auto* v : sorted) {
        if (v->judge != r.judge) throw ValidationError("verdicts come from different judges");
        if (v->protocol != r.protocol) throw ValidationError("verdicts mix blind and disclosed protocols");
        r.systems.try_emplace(v->system_a);
        r.systems.try_emplace(v->system_b);
        ++r.n;
        switch (v->winner) {
            case Winner::A:
            case Winner::B:
                ++r.systems[v->winner_system()].wins;
                ++r.decided;
                break;
            case Winner::tie: ++r.ties; break;
            case Winner::invalid: ++r.invalids; break;
        }
        ids += v->item_id;
        ids += '\n';
    }
    for (auto& [name, t] : r.systems) {
        t.win_rate_pct = pct(t.wins, r.decided);
        t.win_rate_total_pct = pct(t.wins, r.n);
    }
    r.no_decided_items = r.decided == 0;
    r.item_set_hash = sha256_hex(ids);
    return r;
}

double bias_delta(const WinRateReport& blind, const WinRateReport& disclosed, std::string_view self_system) {
    if (blind.item_set_hash != disclosed.item_set_hash || blind.n != disclosed.n) {
        throw ValidationError("blind and disclosed reports cover different item sets");
    }
    if (blind.systems.size() != 2) throw ValidationError("bias delta needs exactly two systems");
    std::set<std::string> a, b;
    for (const auto& [name, _] : blind.systems) a.insert(name);
    for (const auto& [name, _] : disclosed.systems) b.insert(name);
    if (a != b) throw ValidationError("blind and disclosed reports cover different systems");
    if (!a.count(std::string(self_system))) {
        throw ValidationError("system \"" + std::string(self_system) + "\" is not in the reports");
    }
    const std::string other = *a.begin() == self_system ? *std::next(a.begin()) : *a.begin();
    return round2(blind.systems.at(other).win_rate_pct - disclosed.systems.at(other).win_rate_pct);
}

std::string render_win_rate_markdown(std::span<const WinRateReport> reports) {
    std::ostringstream out;
    out << "| Judge | Protocol | System | Wins | Win rate (decided) | Win rate (all) |\n";
    out << "|---|---|---|---:|---:|---:|\n";
    char buf[64];
    for (const auto& r : reports) {
        for (const auto& [name, t] : r.systems) {
            out << "| " << r.judge << " | " << to_string(r.protocol) << " | " << name << " | " << t.wins << " | ";
            std::snprintf(buf, sizeof buf, "%.2f | %.2f |\n", t.win_rate_pct, t.win_rate_total_pct);
            out << buf;
        }
        out << "| " << r.judge << " | " << to_string(r.protocol) << " | (ties / invalid) | " << r.ties << " / "
            << r.invalids << " | | |\n";
    }
    return out.str();
}

}  // namespace fhirqa
