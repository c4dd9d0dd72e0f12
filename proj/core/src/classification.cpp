#include "fhirqa/classification.hpp"

#include "fhirqa/error.hpp"

namespace fhirqa {

void ConfusionCounts::add(RelevanceLabel gold, RelevanceLabel predicted) {
    const bool g = gold == RelevanceLabel::relevant;
    const bool p = predicted == RelevanceLabel::relevant;
    if (g && p) {
        ++tp;
    } else if (!g && p) {
        ++fp;
    } else if (g && !p) {
        ++fn;
    } else {
        ++tn;
    }
}

ConfusionCounts count_confusion(std::span<const RelevanceLabel> gold, std::span<const RelevanceLabel> predicted) {
    if (gold.size() != predicted.size()) {
        throw ValidationError("gold has " + std::to_string(gold.size()) + " labels but predictions have " +
                              std::to_string(predicted.size()));
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) c.add(gold[i], predicted[i]);
    return c;
}

ClassificationReport classification_report(const ConfusionCounts& counts) {
    if (counts.total() == 0) throw ValidationError("classification report needs at least one example");
    ClassificationReport r;
    r.counts = counts;
    const auto tp = static_cast<double>(counts.tp);
    r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
    if (counts.tp + counts.fp == 0) {
        r.precision_undefined = true;
    } else {
        r.precision = tp / static_cast<double>(counts.tp + counts.fp);
    }
    if (counts.tp + counts.fn == 0) {
        r.recall_undefined = true;
    } else {
        r.recall = tp / static_cast<double>(counts.tp + counts.fn);
    }
    if (r.precision + r.recall == 0.0) {
        r.f1_undefined = true;
    } else {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
}

Json to_json(const ConfusionCounts& c) { return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}; }

Json to_json(const ClassificationReport& r) {
    Json zero = Json::array();
    if (r.precision_undefined) zero.push_back("precision");
    if (r.recall_undefined) zero.push_back("recall");
    if (r.f1_undefined) zero.push_back("f1");
    return Json{{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
                {"f1", r.f1},             {"counts", to_json(r.counts)}, {"zero_division", std::move(zero)}};
}

ClassificationReport classification_report_from_json(const Json& j) {
    try {
        const auto& c = j.at("counts");
        ConfusionCounts counts{c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                               c.at("fn").get<std::uint64_t>(), c.at("tn").get<std::uint64_t>()};
        return classification_report(counts);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad classification report: ") + e.what());
    }
}

}  // namespace fhirqa
