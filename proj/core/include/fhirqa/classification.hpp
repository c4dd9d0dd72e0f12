#pragma once

#include <cstdint>
#include <span>

#include "fhirqa/json_lines.hpp"
#include "fhirqa/relevance.hpp"

namespace fhirqa {

/// Binary confusion counts with "relevant" as the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    void add(RelevanceLabel gold, RelevanceLabel predicted);
    bool operator==(const ConfusionCounts&) const = default;
};

/// Counts from parallel gold/predicted vectors. Throws ValidationError on a length mismatch.
ConfusionCounts count_confusion(std::span<const RelevanceLabel> gold, std::span<const RelevanceLabel> predicted);

struct ClassificationReport {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    ConfusionCounts counts;
    // Set when the matching metric was forced to 0 by a zero denominator.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

/// Throws ValidationError when counts.total() == 0.
ClassificationReport classification_report(const ConfusionCounts& counts);

Json to_json(const ConfusionCounts& c);
Json to_json(const ClassificationReport& r);
ClassificationReport classification_report_from_json(const Json& j);

}  // namespace fhirqa
