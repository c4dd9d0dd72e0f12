#pragma once

#include <optional>
#include <string_view>

namespace fhirqa {

/// Binary relevance of a resource to a query; relevant <-> 1.
enum class RelevanceLabel { irrelevant = 0, relevant = 1 };

constexpr std::string_view to_string(RelevanceLabel label) {
    return label == RelevanceLabel::relevant ? "relevant" : "irrelevant";
}

/// Exact canonical form only ("relevant" / "irrelevant"), ignoring surrounding
/// whitespace and case. Free-form model output goes through parse_relevance.
std::optional<RelevanceLabel> relevance_from_string(std::string_view s);

}  // namespace fhirqa
