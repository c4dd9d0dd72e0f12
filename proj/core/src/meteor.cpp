#include "fhirqa/meteor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "fhirqa/error.hpp"
#include "fhirqa/porter.hpp"

namespace fhirqa {

std::string_view to_string(MatchStage s) {
    switch (s) {
        case MatchStage::exact: return "exact";
        case MatchStage::stem: return "stem";
        case MatchStage::synonym: return "synonym";
    }
    return "exact";
}

std::optional<MatchStage> match_stage_from_string(std::string_view s) {
    if (s == "exact") return MatchStage::exact;
    if (s == "stem") return MatchStage::stem;
    if (s == "synonym") return MatchStage::synonym;
    return std::nullopt;
}

std::vector<MatchStage> parse_stages(std::string_view list) {
    std::vector<MatchStage> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = std::min(list.find(',', pos), list.size());
        auto name = list.substr(pos, comma - pos);
        while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
        const auto stage = match_stage_from_string(name);
        if (!stage) throw ValidationError("unknown METEOR stage \"" + std::string(name) + "\"");
        if (std::find(out.begin(), out.end(), *stage) != out.end()) {
            throw ValidationError("METEOR stage \"" + std::string(name) + "\" listed twice");
        }
        out.push_back(*stage);
        pos = comma + 1;
    }
    return out;
}

SynonymLexicon SynonymLexicon::parse(std::string_view text) {
    SynonymLexicon lex;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;

        std::set<std::string> words;
        std::size_t p = 0;
        while (p <= line.size()) {
            const auto comma = std::min(line.find(',', p), line.size());
            for (auto& w : tokenize(line.substr(p, comma - p))) words.insert(std::move(w));
            p = comma + 1;
        }
        if (words.size() < 2) continue;
        for (const auto& w : words) lex.membership_[w].push_back(lex.n_synsets_);
        ++lex.n_synsets_;
    }
    return lex;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

bool SynonymLexicon::synonyms(std::string_view a, std::string_view b) const {
    const auto ia = membership_.find(std::string(a));
    const auto ib = membership_.find(std::string(b));
    if (ia == membership_.end() || ib == membership_.end()) return false;
    const auto& x = ia->second;
    const auto& y = ib->second;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] == y[j]) return true;
        (x[i] < y[j]) ? ++i : ++j;
    }
    return false;
}

MeteorConfig& MeteorConfig::with_lexicon_file(const std::filesystem::path& path) {
    lexicon = std::make_shared<const SynonymLexicon>(SynonymLexicon::load(path));
    synonym_lexicon = path;
    if (std::find(stages.begin(), stages.end(), MatchStage::synonym) == stages.end()) {
        stages.push_back(MatchStage::synonym);
    }
    return *this;
}

void MeteorConfig::validate() const {
    if (stages.empty()) throw ValidationError("METEOR needs at least one matching stage");
    std::set<MatchStage> seen(stages.begin(), stages.end());
    if (seen.size() != stages.size()) throw ValidationError("METEOR stages must not repeat");
    if (!(fmean_recall_weight > 0) || !(penalty_gamma > 0) || !(penalty_weight > 0)) {
        throw ValidationError("METEOR weights must be > 0");
    }
    if (seen.count(MatchStage::synonym) && !lexicon) {
        throw ValidationError("synonym stage requires a synonym lexicon");
    }
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// One matching stage over the positions left free by earlier stages.
//
// The maximum number of new matches is found first; a depth-first search over
// candidate positions then looks for a matching of that size with the fewest
// chunks over all matches (earlier stages included).
class StageSearch {
public:
    StageSearch(std::size_t n_cand, std::size_t n_ref, const std::vector<std::size_t>& fixed,
                std::vector<std::vector<std::size_t>> compat, std::vector<std::size_t> cand_class,
                std::vector<std::size_t> ref_class, std::size_t n_classes, std::size_t budget)
        : n_(n_cand),
          fixed_(fixed),
          compat_(std::move(compat)),
          cand_class_(std::move(cand_class)),
          ref_class_(std::move(ref_class)),
          ref_used_(n_ref, 0),
          choice_(n_cand, kNone),
          budget_(budget) {
        for (std::size_t i = 0; i < n_; ++i) {
            if (fixed_[i] != kNone) ref_used_[fixed_[i]] = 1;
        }
        target_ = max_matching(fallback_);
        if (!cand_class_.empty()) {
            cand_left_.assign(n_classes, 0);
            ref_free_.assign(n_classes, 0);
            for (std::size_t i = 0; i < n_; ++i) {
                if (fixed_[i] == kNone && cand_class_[i] != kNone) ++cand_left_[cand_class_[i]];
            }
            for (std::size_t j = 0; j < ref_used_.size(); ++j) {
                if (!ref_used_[j] && ref_class_[j] != kNone) ++ref_free_[ref_class_[j]];
            }
        }
    }

    // New matches chosen for each candidate position (kNone where unmatched).
    std::vector<std::size_t> run() {
        if (target_ == 0) return std::vector<std::size_t>(n_, kNone);
        dfs(0, kNone, kNone, 0, 0);
        if (best_chunks_ == kNone) {
            exhausted_ = true;
            return fallback_;
        }
        return best_;
    }

    bool exhausted() const { return exhausted_; }

private:
    // Kuhn's augmenting paths; returns the size and leaves one maximum matching in `out`.
    std::size_t max_matching(std::vector<std::size_t>& out) {
        out.assign(n_, kNone);
        std::vector<std::size_t> owner(ref_used_.size(), kNone);
        std::size_t size = 0;
        std::vector<char> seen;
        std::function<bool(std::size_t)> augment = [&](std::size_t i) {
            for (auto j : compat_[i]) {
                if (ref_used_[j] || seen[j]) continue;
                seen[j] = 1;
                if (owner[j] == kNone || augment(owner[j])) {
                    owner[j] = i;
                    out[i] = j;
                    return true;
                }
            }
            return false;
        };
        for (std::size_t i = 0; i < n_; ++i) {
            if (fixed_[i] != kNone || compat_[i].empty()) continue;
            seen.assign(ref_used_.size(), 0);
            if (augment(i)) ++size;
        }
        return size;
    }

    // Upper bound on new matches available at positions >= i.
    std::size_t bound(std::size_t i) const {
        if (!cand_class_.empty()) {
            std::size_t b = 0;
            for (std::size_t k = 0; k < cand_left_.size(); ++k) b += std::min(cand_left_[k], ref_free_[k]);
            return b;
        }
        std::size_t cand = 0;
        std::set<std::size_t> refs;
        for (std::size_t p = i; p < n_; ++p) {
            if (fixed_[p] != kNone) continue;
            bool any = false;
            for (auto j : compat_[p]) {
                if (!ref_used_[j]) {
                    any = true;
                    refs.insert(j);
                }
            }
            cand += any ? 1 : 0;
        }
        return std::min(cand, refs.size());
    }

    static std::size_t opens_chunk(std::size_t i, std::size_t j, std::size_t pi, std::size_t pj) {
        return (pi != kNone && i == pi + 1 && j == pj + 1) ? 0 : 1;
    }

    void dfs(std::size_t i, std::size_t pi, std::size_t pj, std::size_t chunks, std::size_t matched) {
        if (++nodes_ > budget_) {
            exhausted_ = true;
            return;
        }
        if (best_chunks_ != kNone && chunks >= best_chunks_) return;
        if (i == n_) {
            if (matched == target_) {
                best_chunks_ = chunks;
                best_ = choice_;
            }
            return;
        }
        if (fixed_[i] != kNone) {
            dfs(i + 1, i, fixed_[i], chunks + opens_chunk(i, fixed_[i], pi, pj), matched);
            return;
        }
        const std::size_t cls = cand_class_.empty() ? kNone : cand_class_[i];
        if (cls != kNone) --cand_left_[cls];
        // Positions > i can still contribute at most bound(i + 1) more.
        const std::size_t rest = bound(i + 1);

        if (!compat_[i].empty() && matched + 1 + rest >= target_) {
            auto try_j = [&](std::size_t j) {
                if (ref_used_[j] || exhausted_) return;
                ref_used_[j] = 1;
                if (cls != kNone) --ref_free_[cls];
                choice_[i] = j;
                dfs(i + 1, i, j, chunks + opens_chunk(i, j, pi, pj), matched + 1);
                choice_[i] = kNone;
                if (cls != kNone) ++ref_free_[cls];
                ref_used_[j] = 0;
            };
            const std::size_t next = pj == kNone ? kNone : pj + 1;
            const bool has_next = next != kNone && std::binary_search(compat_[i].begin(), compat_[i].end(), next);
            if (has_next) try_j(next);
            for (auto j : compat_[i]) {
                if (j != next || !has_next) try_j(j);
            }
        }
        if (!exhausted_ && matched + bound(i + 1) >= target_) dfs(i + 1, pi, pj, chunks, matched);
        if (cls != kNone) ++cand_left_[cls];
    }

    std::size_t n_;
    const std::vector<std::size_t>& fixed_;
    std::vector<std::vector<std::size_t>> compat_;
    std::vector<std::size_t> cand_class_;
    std::vector<std::size_t> ref_class_;
    std::vector<std::size_t> cand_left_;
    std::vector<std::size_t> ref_free_;
    std::vector<char> ref_used_;
    std::vector<std::size_t> choice_;
    std::vector<std::size_t> best_;
    std::vector<std::size_t> fallback_;
    std::size_t best_chunks_ = kNone;
    std::size_t target_ = 0;
    std::size_t budget_;
    std::size_t nodes_ = 0;
    bool exhausted_ = false;
};

// Maps equal keys to dense class ids shared by both sides.
template <typename Key>
std::size_t classify(std::span<const Key> cand_keys, std::span<const Key> ref_keys, std::vector<std::size_t>& cand,
                     std::vector<std::size_t>& ref) {
    std::map<Key, std::size_t> ids;
    auto id = [&](const Key& k) { return ids.try_emplace(k, ids.size()).first->second; };
    cand.resize(cand_keys.size());
    ref.resize(ref_keys.size());
    for (std::size_t i = 0; i < cand_keys.size(); ++i) cand[i] = id(cand_keys[i]);
    for (std::size_t j = 0; j < ref_keys.size(); ++j) ref[j] = id(ref_keys[j]);
    return ids.size();
}

}  // namespace

Alignment meteor_align(std::span<const std::string> candidate, std::span<const std::string> reference,
                       const MeteorConfig& config) {
    config.validate();
    const std::size_t n = candidate.size();
    const std::size_t r = reference.size();
    std::vector<std::size_t> matched_ref(n, kNone);
    std::vector<MatchStage> stage_of(n, MatchStage::exact);
    std::vector<char> ref_taken(r, 0);
    Alignment out;

    std::vector<std::string> cand_stems, ref_stems;
    for (const auto stage : config.stages) {
        std::vector<std::size_t> cand_class, ref_class;
        std::size_t n_classes = 0;
        if (stage == MatchStage::exact) {
            n_classes = classify<std::string>(candidate, reference, cand_class, ref_class);
        } else if (stage == MatchStage::stem) {
            if (cand_stems.empty() && n) {
                for (const auto& t : candidate) cand_stems.push_back(porter_stem(t));
            }
            if (ref_stems.empty() && r) {
                for (const auto& t : reference) ref_stems.push_back(porter_stem(t));
            }
            n_classes = classify<std::string>(cand_stems, ref_stems, cand_class, ref_class);
        }
        std::vector<std::vector<std::size_t>> compat(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (matched_ref[i] != kNone) continue;
            for (std::size_t j = 0; j < r; ++j) {
                if (ref_taken[j]) continue;
                const bool ok = stage == MatchStage::synonym ? config.lexicon->synonyms(candidate[i], reference[j])
                                                             : cand_class[i] == ref_class[j];
                if (ok) compat[i].push_back(j);
            }
        }
        // Fixed positions carry no class so the per-class bound ignores them.
        if (!cand_class.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
                if (matched_ref[i] != kNone) cand_class[i] = kNone;
            }
            for (std::size_t j = 0; j < r; ++j) {
                if (ref_taken[j]) ref_class[j] = kNone;
            }
        }
        StageSearch search(n, r, matched_ref, std::move(compat), std::move(cand_class), std::move(ref_class),
                           n_classes, config.search_budget);
        const auto chosen = search.run();
        if (search.exhausted()) out.exact = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i] == kNone) continue;
            matched_ref[i] = chosen[i];
            stage_of[i] = stage;
            ref_taken[chosen[i]] = 1;
        }
    }

    std::size_t pi = kNone, pj = kNone;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = matched_ref[i];
        if (j == kNone) continue;
        out.pairs.push_back({i, j, stage_of[i]});
        if (!(pi != kNone && i == pi + 1 && j == pj + 1)) ++out.chunks;
        pi = i;
        pj = j;
    }
    out.matches = out.pairs.size();
    return out;
}

double meteor_from_stats(const MeteorStats& s, const MeteorConfig& config) {
    if (s.matches == 0 || s.candidate_len == 0 || s.reference_len == 0) return 0.0;
    const double m = static_cast<double>(s.matches);
    const double p = m / static_cast<double>(s.candidate_len);
    const double rc = m / static_cast<double>(s.reference_len);
    const double w = config.fmean_recall_weight;
    const double fmean = (1.0 + w) * p * rc / (rc + w * p);
    const double penalty =
        config.penalty_weight * std::pow(static_cast<double>(s.chunks) / m, config.penalty_gamma);
    return std::clamp(fmean * (1.0 - penalty), 0.0, 1.0);
}

namespace {
MeteorStats stats_for(std::string_view candidate, std::string_view reference, const MeteorConfig& config) {
    const auto c = tokenize(candidate);
    const auto r = tokenize(reference);
    const auto a = meteor_align(c, r, config);
    return MeteorStats{c.size(), r.size(), a.matches, a.chunks};
}
}  // namespace

double meteor(std::string_view candidate, std::string_view reference, const MeteorConfig& config) {
    return meteor_from_stats(stats_for(candidate, reference, config), config);
}

Json to_json(const MeteorReport& r) {
    return Json{{"mean", r.mean}, {"per_example", r.per_example}, {"aggregate", r.aggregate}};
}

MeteorReport corpus_meteor(std::span<const std::pair<std::string, std::string>> pairs, const MeteorConfig& config,
                           bool aggregate_counts) {
    if (pairs.empty()) throw ValidationError("corpus METEOR needs at least one pair");
    config.validate();
    MeteorReport out;
    out.aggregate = aggregate_counts;
    MeteorStats total;
    double sum = 0;
    for (const auto& [cand, ref] : pairs) {
        const auto s = stats_for(cand, ref, config);
        const double score = meteor_from_stats(s, config);
        out.per_example.push_back(score);
        sum += score;
        total.candidate_len += s.candidate_len;
        total.reference_len += s.reference_len;
        total.matches += s.matches;
        total.chunks += s.chunks;
    }
    out.mean = aggregate_counts ? meteor_from_stats(total, config) : sum / static_cast<double>(pairs.size());
    return out;
}

}  // namespace fhirqa
