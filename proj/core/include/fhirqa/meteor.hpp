#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fhirqa/json_lines.hpp"

namespace fhirqa {

/// Lowercases, splits on whitespace and strips leading/trailing ASCII
/// punctuation from each piece; empty pieces are dropped.
std::vector<std::string> tokenize(std::string_view text);

enum class MatchStage { exact, stem, synonym };

std::string_view to_string(MatchStage s);
std::optional<MatchStage> match_stage_from_string(std::string_view s);
/// Parses "exact,stem[,synonym]". Throws ValidationError on unknown or repeated names.
std::vector<MatchStage> parse_stages(std::string_view list);

/// Word -> synset membership. File format: one comma-separated synset per line;
/// blank lines and lines starting with '#' are skipped.
class SynonymLexicon {
public:
    static SynonymLexicon parse(std::string_view text);
    static SynonymLexicon load(const std::filesystem::path& path);

    bool synonyms(std::string_view a, std::string_view b) const;
    std::size_t synsets() const { return n_synsets_; }

private:
    std::unordered_map<std::string, std::vector<std::size_t>> membership_;
    std::size_t n_synsets_ = 0;
};

struct MeteorConfig {
    std::vector<MatchStage> stages{MatchStage::exact, MatchStage::stem};
    double fmean_recall_weight = 9.0;
    double penalty_gamma = 3.0;
    double penalty_weight = 0.5;
    std::optional<std::filesystem::path> synonym_lexicon;
    std::shared_ptr<const SynonymLexicon> lexicon;
    /// Search nodes per stage before settling for the best alignment found so far.
    std::size_t search_budget = 200'000;

    /// Loads the lexicon and appends the synonym stage if absent.
    MeteorConfig& with_lexicon_file(const std::filesystem::path& path);
    /// Throws ValidationError: empty or repeated stages, non-positive weights,
    /// synonym stage without a lexicon.
    void validate() const;
};

struct AlignedPair {
    std::size_t candidate = 0;
    std::size_t reference = 0;
    MatchStage stage = MatchStage::exact;

    bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    std::vector<AlignedPair> pairs;  // sorted by candidate index
    /// False when a stage hit the search budget; matches is still maximal but
    /// chunks may exceed the minimum.
    bool exact = true;
};

Alignment meteor_align(std::span<const std::string> candidate, std::span<const std::string> reference,
                       const MeteorConfig& config = {});

struct MeteorStats {
    std::size_t candidate_len = 0;
    std::size_t reference_len = 0;
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

/// Score from counts; 0 when there are no matches or either side is empty.
double meteor_from_stats(const MeteorStats& s, const MeteorConfig& config = {});

double meteor(std::string_view candidate, std::string_view reference, const MeteorConfig& config = {});

struct MeteorReport {
    double mean = 0;
    std::vector<double> per_example;
    bool aggregate = false;  // mean computed from summed counts rather than averaged
};

Json to_json(const MeteorReport& r);

/// Throws ValidationError on empty input. With aggregate_counts the corpus
/// score is computed from summed lengths, matches and chunks.
MeteorReport corpus_meteor(std::span<const std::pair<std::string, std::string>> pairs,
                           const MeteorConfig& config = {}, bool aggregate_counts = false);

}  // namespace fhirqa
