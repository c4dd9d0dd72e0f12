#include <utility>

#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"

namespace fhirqa {

std::string_view to_string(ResourceType type) {
    switch (type) {
        case ResourceType::Procedure: return "Procedure";
        case ResourceType::Medication: return "Medication";
        case ResourceType::MedicationRequest: return "MedicationRequest";
        case ResourceType::Encounter: return "Encounter";
        case ResourceType::ImagingStudy: return "ImagingStudy";
        case ResourceType::Immunization: return "Immunization";
        case ResourceType::Device: return "Device";
        case ResourceType::CarePlan: return "CarePlan";
        case ResourceType::ExplanationOfBenefit: return "ExplanationOfBenefit";
        case ResourceType::AllergyIntolerance: return "AllergyIntolerance";
        case ResourceType::Observation: return "Observation";
        case ResourceType::Condition: return "Condition";
        case ResourceType::DiagnosticReport: return "DiagnosticReport";
    }
    return "";
}

std::optional<ResourceType> resource_type_from_string(std::string_view name) {
    for (ResourceType t : kSupportedResourceTypes) {
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

Json to_json(const CompactResource& r) {
    return Json{{"resource_type", std::string(to_string(r.resource_type))},
                {"resource_id", r.resource_id},
                {"patient_id", r.patient_id},
                {"body", r.body},
                {"label", r.label}};
}

CompactResource compact_resource_from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("compact resource must be a JSON object");
    CompactResource r;
    try {
        const auto type_name = j.at("resource_type").get<std::string>();
        auto type = resource_type_from_string(type_name);
        if (!type) throw SchemaError("unsupported resource_type: " + type_name);
        r.resource_type = *type;
        r.resource_id = j.at("resource_id").get<std::string>();
        r.patient_id = j.at("patient_id").get<std::string>();
        r.body = j.value("body", Json::object());
        r.label = j.value("label", std::string());
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad compact resource: ") + e.what());
    }
    return r;
}

Json prompt_view(const CompactResource& r) {
    Json view = Json::object();
    view["resourceType"] = std::string(to_string(r.resource_type));
    view["id"] = r.resource_id;
    for (const auto& [key, value] : r.body.items()) {
        if (key == "resourceType" || key == "id") continue;
        view[key] = value;
    }
    return view;
}

Json to_json(const PatientRecord& r) {
    Json resources = Json::array();
    for (const auto& res : r.resources) resources.push_back(to_json(res));
    return Json{{"patient_id", r.patient_id}, {"resources", std::move(resources)}};
}

PatientRecord patient_record_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("patient_id") || !j.contains("resources") ||
        !j.at("resources").is_array()) {
        throw SchemaError("patient record needs patient_id and a resources array");
    }
    PatientRecord rec;
    rec.patient_id = j.at("patient_id").get<std::string>();
    for (const auto& res : j.at("resources")) rec.resources.push_back(compact_resource_from_json(res));
    return rec;
}

std::vector<RawResource> parse_bundle(std::string_view bytes) {
    Json doc = parse_json(bytes);
    if (!doc.is_object()) throw SchemaError("bundle must be a JSON object");
    if (auto it = doc.find("resourceType"); it != doc.end() && *it != "Bundle") {
        throw SchemaError("expected resourceType Bundle, got " + it->dump());
    }
    auto entries = doc.find("entry");
    if (entries == doc.end() || !entries->is_array()) {
        throw SchemaError("bundle has no entry array");
    }
    std::vector<RawResource> out;
    out.reserve(entries->size());
    std::size_t index = 0;
    for (auto& entry : *entries) {
        auto res = entry.is_object() ? entry.find("resource") : entry.end();
        if (res == entry.end() || !res->is_object()) {
            throw SchemaError("bundle entry " + std::to_string(index) + " has no resource object");
        }
        auto type = res->find("resourceType");
        if (type == res->end() || !type->is_string()) {
            throw SchemaError("bundle entry " + std::to_string(index) + " has no resourceType");
        }
        out.push_back(RawResource{type->get<std::string>(), std::move(*res)});
        ++index;
    }
    return out;
}

std::vector<RawResource> filter_supported(const std::vector<RawResource>& raw, FilterSummary* summary) {
    std::vector<RawResource> out;
    for (const auto& r : raw) {
        const bool supported = resource_type_from_string(r.type).has_value();
        if (summary) ++(supported ? summary->kept : summary->dropped)[r.type];
        if (supported) out.push_back(r);
    }
    return out;
}

}  // namespace fhirqa
