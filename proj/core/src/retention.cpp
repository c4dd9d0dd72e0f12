#include <algorithm>
#include <cctype>

#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"

namespace fhirqa {
namespace {

using Path = std::vector<std::string>;

constexpr std::string_view kAnyDepth = "**";

Path split_path(std::string_view path) {
    Path out;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const auto end = dot == std::string_view::npos ? path.size() : dot;
        if (end > start) out.emplace_back(path.substr(start, end - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return out;
}

Json project(const Json& node, const std::vector<Path>& paths, std::size_t depth);

Json project_object(const Json& node, const std::vector<Path>& paths, std::size_t depth) {
    Json out = Json::object();
    for (const auto& [key, child] : node.items()) {
        bool whole = false;
        std::vector<Path> deeper;
        for (const auto& p : paths) {
            if (p.size() <= depth || p[depth] != key) continue;
            if (p.size() == depth + 1) {
                whole = true;
                break;
            }
            deeper.push_back(p);
        }
        if (whole) {
            out[key] = child;
        } else if (!deeper.empty()) {
            Json sub = project(child, deeper, depth + 1);
            if (!sub.is_null()) out[key] = std::move(sub);
        }
    }
    return out;
}

// Returns null when nothing under `node` survives.
Json project(const Json& node, const std::vector<Path>& paths, std::size_t depth) {
    if (node.is_object()) return project_object(node, paths, depth);
    if (node.is_array()) {
        Json out = Json::array();
        for (const auto& el : node) {
            Json sub = project(el, paths, depth);
            if (!sub.is_null()) out.push_back(std::move(sub));
        }
        return out;
    }
    return Json();  // a path that continues into a scalar matches nothing
}

void drop_path(Json& node, const Path& path, std::size_t depth) {
    if (depth >= path.size()) return;
    if (node.is_array()) {
        for (auto& el : node) drop_path(el, path, depth);
        return;
    }
    if (!node.is_object()) return;
    if (path[depth] == kAnyDepth) {
        drop_path(node, path, depth + 1);
        for (auto& [key, child] : node.items()) drop_path(child, path, depth);
        return;
    }
    auto it = node.find(path[depth]);
    if (it == node.end()) return;
    if (depth + 1 == path.size()) {
        node.erase(it);
    } else {
        drop_path(*it, path, depth + 1);
    }
}

bool prune(Json& node) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end();) {
            if (prune(*it)) {
                it = node.erase(it);
            } else {
                ++it;
            }
        }
        return node.empty();
    }
    if (node.is_array()) {
        Json kept = Json::array();
        for (auto& el : node) {
            if (!prune(el)) kept.push_back(std::move(el));
        }
        node = std::move(kept);
        return node.empty();
    }
    if (node.is_string()) return node.get_ref<const std::string&>().empty();
    return node.is_null();
}

std::vector<std::string> string_list(const Json& j, const std::string& where) {
    if (j.is_null()) return {};
    if (!j.is_array()) throw SchemaError("retention ruleset: " + where + " must be an array of paths");
    std::vector<std::string> out;
    for (const auto& p : j) {
        if (!p.is_string()) throw SchemaError("retention ruleset: " + where + " must contain strings");
        out.push_back(p.get<std::string>());
    }
    return out;
}

const Json* find_path(const Json& node, std::string_view dotted) {
    const Json* cur = &node;
    for (const auto& seg : split_path(dotted)) {
        if (cur->is_array()) {
            if (cur->empty()) return nullptr;
            cur = &(*cur)[0];
        }
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(seg);
        if (it == cur->end()) return nullptr;
        cur = &*it;
    }
    return cur;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// Text of a CodeableConcept-like node: text, else first coding display, else name.
std::optional<std::string> concept_text(const Json& node) {
    if (node.is_array()) {
        for (const auto& el : node) {
            if (auto t = concept_text(el)) return t;
        }
        return std::nullopt;
    }
    if (node.is_string()) {
        auto s = collapse_whitespace(node.get_ref<const std::string&>());
        if (!s.empty()) return s;
        return std::nullopt;
    }
    if (!node.is_object()) return std::nullopt;
    for (const char* key : {"text", "display", "name"}) {
        if (auto it = node.find(key); it != node.end() && it->is_string()) {
            auto s = collapse_whitespace(it->get_ref<const std::string&>());
            if (!s.empty()) return s;
        }
    }
    if (auto it = node.find("coding"); it != node.end()) return concept_text(*it);
    return std::nullopt;
}

}  // namespace

const RetentionRuleset& RetentionRuleset::default_rules() {
    static const RetentionRuleset rules = from_json(parse_json(
#include "default_retention.inc"
        ));
    return rules;
}

RetentionRuleset RetentionRuleset::from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("retention ruleset must be a JSON object");
    RetentionRuleset rules;
    for (const auto& [key, value] : j.items()) {
        if (key == "global_drop") {
            rules.global_drop_ = string_list(value, "global_drop");
            continue;
        }
        if (!resource_type_from_string(key)) {
            throw SchemaError("retention ruleset: unsupported resource type \"" + key + "\"");
        }
        if (!value.is_object()) throw SchemaError("retention ruleset: rules for " + key + " must be an object");
        TypeRules tr;
        tr.keep = string_list(value.value("keep", Json()), key + ".keep");
        tr.drop = string_list(value.value("drop", Json()), key + ".drop");
        rules.per_type_.emplace(key, std::move(tr));
    }
    return rules;
}

RetentionRuleset RetentionRuleset::load(const std::filesystem::path& path) {
    return from_json(parse_json(read_file(path)));
}

Json RetentionRuleset::to_json() const {
    Json j = Json::object();
    j["global_drop"] = global_drop_;
    for (const auto& [type, tr] : per_type_) j[type] = Json{{"keep", tr.keep}, {"drop", tr.drop}};
    return j;
}

const RetentionRuleset::TypeRules* RetentionRuleset::rules_for(std::string_view type) const {
    auto it = per_type_.find(type);
    return it == per_type_.end() ? nullptr : &it->second;
}

Json RetentionRuleset::apply(std::string_view type, const Json& resource) const {
    Json body = resource;
    const TypeRules* tr = rules_for(type);
    if (tr && !tr->keep.empty()) {
        std::vector<Path> keep;
        for (const auto& p : tr->keep) keep.push_back(split_path(p));
        body = project(resource, keep, 0);
        if (body.is_null()) body = Json::object();
    }
    if (tr) {
        for (const auto& p : tr->drop) drop_path(body, split_path(p), 0);
    }
    for (const auto& p : global_drop_) drop_path(body, split_path(p), 0);
    body.erase("resourceType");
    body.erase("id");
    prune(body);
    if (!body.is_object()) body = Json::object();
    return body;
}

std::string normalize_patient_reference(std::string_view reference) {
    for (std::string_view prefix : {"urn:uuid:", "Patient/"}) {
        if (reference.starts_with(prefix)) reference.remove_prefix(prefix.size());
    }
    return std::string(reference);
}

CompactResource compact_resource(const RawResource& raw, const RetentionRuleset& rules) {
    const auto type = resource_type_from_string(raw.type);
    const std::string name = raw.type + "/" + raw.resource.value("id", std::string("?"));
    if (!type) throw IngestError(name, "unsupported resource type");
    if (!raw.resource.is_object()) throw IngestError(name, "resource is not an object");

    auto id = raw.resource.find("id");
    if (id == raw.resource.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
        throw IngestError(name, "missing id");
    }
    std::string patient;
    for (const char* field : {"subject", "patient"}) {
        auto it = raw.resource.find(field);
        if (it == raw.resource.end() || !it->is_object()) continue;
        auto ref = it->find("reference");
        if (ref != it->end() && ref->is_string()) {
            patient = normalize_patient_reference(ref->get_ref<const std::string&>());
            if (!patient.empty()) break;
        }
    }
    if (patient.empty()) throw IngestError(name, "missing subject/patient reference");

    CompactResource out;
    out.resource_type = *type;
    out.resource_id = id->get<std::string>();
    out.patient_id = patient;
    out.body = rules.apply(raw.type, raw.resource);
    for (const char* field : {"subject", "patient"}) {
        if (auto it = out.body.find(field); it != out.body.end() && it->is_object() && it->contains("reference")) {
            (*it)["reference"] = patient;
        }
    }
    out.label = make_resource_label(out);
    return out;
}

RawResource expand_resource(const CompactResource& r) {
    Json res = r.body;
    res["resourceType"] = std::string(to_string(r.resource_type));
    res["id"] = r.resource_id;
    const char* field = res.contains("patient") ? "patient" : "subject";
    if (!res.contains(field) || !res[field].is_object()) res[field] = Json::object();
    res[field]["reference"] = "Patient/" + r.patient_id;
    return RawResource{std::string(to_string(r.resource_type)), std::move(res)};
}

std::optional<std::string> label_date(const Json& body) {
    static constexpr std::string_view kDateFields[] = {
        "effectiveDateTime", "onsetDateTime", "performedPeriod.start", "occurrenceDateTime",
        "period.start",      "authoredOn",    "started",               "recordedDate",
        "billablePeriod.start", "performedDateTime", "issued",
    };
    for (auto field : kDateFields) {
        const Json* node = find_path(body, field);
        if (!node || !node->is_string()) continue;
        const auto& s = node->get_ref<const std::string&>();
        // YYYY-MM-DD prefix; partial dates carry no day and are skipped.
        if (s.size() < 10 || s[4] != '-' || s[7] != '-') continue;
        const bool digits = std::all_of(s.begin(), s.begin() + 10, [](char c) {
            return std::isdigit(static_cast<unsigned char>(c)) || c == '-';
        });
        if (!digits) continue;
        return s.substr(5, 2) + "-" + s.substr(8, 2) + "-" + s.substr(0, 4);
    }
    return std::nullopt;
}

std::optional<std::string> label_display(const Json& body) {
    static constexpr std::string_view kConceptFields[] = {
        "code", "vaccineCode", "medicationCodeableConcept", "medicationReference",
        "procedureCode", "type", "deviceName", "category",
    };
    for (auto field : kConceptFields) {
        const Json* node = find_path(body, field);
        if (!node) continue;
        if (auto text = concept_text(*node)) return text;
    }
    return std::nullopt;
}

std::string make_resource_label(const CompactResource& r) {
    std::string label(to_string(r.resource_type));
    const auto display = label_display(r.body);
    const auto date = label_date(r.body);
    if (!display && !date) return label + " " + r.resource_id;
    if (display) label += " " + *display;
    if (date) label += " " + *date;
    return label;
}

}  // namespace fhirqa
