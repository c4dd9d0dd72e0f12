#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fhirqa/model_client.hpp"

namespace fhirqa {

enum class Protocol { blind, disclosed };
enum class PresentationOrder { ab, ba };
enum class Winner { A, B, tie, invalid };

std::string_view to_string(Protocol p);
std::string_view to_string(PresentationOrder o);
std::string_view to_string(Winner w);
std::optional<Protocol> protocol_from_string(std::string_view s);

/// One row of the candidates file: answers from several systems to the same query.
struct CandidateSet {
    std::string item_id;
    std::string query;
    std::string reference_answer;
    std::map<std::string, std::string> answers;  // system -> text
};

CandidateSet candidate_set_from_json(const Json& j);
Json to_json(const CandidateSet& c);
std::vector<CandidateSet> read_candidates(const std::filesystem::path& path);

struct SystemAnswer {
    std::string system;
    std::string text;
};

struct JudgeItem {
    std::string item_id;
    std::string query;
    std::string reference_answer;
    SystemAnswer a;
    SystemAnswer b;
    PresentationOrder order = PresentationOrder::ab;
};

/// Order for an item under a run seed; depends only on (seed, item_id).
PresentationOrder presentation_order(std::uint64_t seed, std::string_view item_id);

/// Expands candidate sets into pairwise items. A set with two systems keeps its
/// item_id; larger sets produce one item per system pair, "<id>#<a>-vs-<b>",
/// with systems in name order. Throws ValidationError for fewer than two answers.
std::vector<JudgeItem> make_judge_items(std::span<const CandidateSet> sets, std::uint64_t seed);

Messages build_judge_prompt(const JudgeItem& item, Protocol protocol);

/// 1, 2, or 0 for TIE, from the last "WINNER:" line; nullopt when there is none.
std::optional<int> parse_winner_line(std::string_view raw);

struct Verdict {
    std::string item_id;
    Winner winner = Winner::invalid;
    std::string system_a;
    std::string system_b;
    PresentationOrder order = PresentationOrder::ab;
    std::string raw;
    std::string judge;
    Protocol protocol = Protocol::blind;

    /// Name of the winning system, empty for tie/invalid.
    std::string winner_system() const;
};

Json to_json(const Verdict& v);
Verdict verdict_from_json(const Json& j);

/// Maps "Response 1/2" back through the item's presentation order.
Winner resolve_winner(std::optional<int> response, PresentationOrder order);

Verdict judge_pair(ModelClient& client, const EndpointConfig& judge, const JudgeItem& item, Protocol protocol);

std::vector<Verdict> judge_items(ModelClient& client, const EndpointConfig& judge, std::span<const JudgeItem> items,
                                 Protocol protocol, std::size_t concurrency = 4);

struct SystemTally {
    std::size_t wins = 0;
    double win_rate_pct = 0;        // over decided items
    double win_rate_total_pct = 0;  // over all items
};

struct WinRateReport {
    std::string judge;
    Protocol protocol = Protocol::blind;
    std::map<std::string, SystemTally> systems;
    std::size_t n = 0;
    std::size_t decided = 0;
    std::size_t ties = 0;
    std::size_t invalids = 0;
    bool no_decided_items = false;
    std::string item_set_hash;
};

Json to_json(const WinRateReport& r);
WinRateReport win_rate_report_from_json(const Json& j);

/// Throws ValidationError for an empty input or verdicts from different judges or protocols.
WinRateReport aggregate(std::span<const Verdict> verdicts);

/// Blind minus disclosed win rate of the system that is not `self_system`.
/// Throws ValidationError unless both reports cover the same items and the
/// same two systems, one of which is self_system.
double bias_delta(const WinRateReport& blind, const WinRateReport& disclosed, std::string_view self_system);

std::string render_win_rate_markdown(std::span<const WinRateReport> reports);

}  // namespace fhirqa
