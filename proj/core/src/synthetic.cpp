#include "fhirqa/synthetic.hpp"

#include <array>
#include <cstdio>
#include <string_view>

#include "fhirqa/hashing.hpp"
#include "fhirqa/json_lines.hpp"
#include "fhirqa/random.hpp"

namespace fhirqa {
namespace {

struct Concept {
    std::string_view system;
    std::string_view code;
    std::string_view display;
};

constexpr std::string_view kSnomed = "http://snomed.info/sct";
constexpr std::string_view kLoinc = "http://loinc.org";
constexpr std::string_view kRxNorm = "http://www.nlm.nih.gov/research/umls/rxnorm";
constexpr std::string_view kCvx = "http://hl7.org/fhir/sid/cvx";

constexpr std::array kConditions = {
    Concept{kSnomed, "410429000", "Cardiac Arrest"},
    Concept{kSnomed, "38341003", "Hypertension"},
    Concept{kSnomed, "714628002", "Prediabetes"},
    Concept{kSnomed, "10509002", "Acute bronchitis (disorder)"},
    Concept{kSnomed, "444814009", "Viral sinusitis (disorder)"},
    Concept{kSnomed, "195662009", "Acute viral pharyngitis (disorder)"},
    Concept{kSnomed, "162864005", "Body mass index 30+ - obesity (finding)"},
    Concept{kSnomed, "59621000", "Essential hypertension (disorder)"},
};

struct Measure {
    Concept code;
    double low;
    double high;
    std::string_view unit;
};

constexpr std::array kObservations = {
    Measure{{kLoinc, "8302-2", "Body Height"}, 150, 195, "cm"},
    Measure{{kLoinc, "29463-7", "Body Weight"}, 50, 110, "kg"},
    Measure{{kLoinc, "8867-4", "Heart rate"}, 55, 100, "/min"},
    Measure{{kLoinc, "4548-4", "Hemoglobin A1c/Hemoglobin.total in Blood"}, 4.5, 8.0, "%"},
    Measure{{kLoinc, "2339-0", "Glucose"}, 70, 140, "mg/dL"},
    Measure{{kLoinc, "2093-3", "Total Cholesterol"}, 150, 260, "mg/dL"},
    Measure{{kLoinc, "39156-5", "Body Mass Index"}, 18, 35, "kg/m2"},
};

constexpr std::array kProcedures = {
    Concept{kSnomed, "430193006", "Medication Reconciliation (procedure)"},
    Concept{kSnomed, "171207006", "Depression screening (procedure)"},
    Concept{kSnomed, "232717009", "Coronary artery bypass grafting"},
    Concept{kSnomed, "73761001", "Colonoscopy"},
    Concept{kSnomed, "76601001", "Intramuscular injection"},
};

constexpr std::array kMedications = {
    Concept{kRxNorm, "314076", "lisinopril 10 MG Oral Tablet"},
    Concept{kRxNorm, "308182", "Amoxicillin 250 MG Oral Capsule"},
    Concept{kRxNorm, "860975", "24 HR Metformin hydrochloride 500 MG Extended Release Oral Tablet"},
    Concept{kRxNorm, "243670", "aspirin 81 MG Oral Tablet"},
    Concept{kRxNorm, "313782", "Acetaminophen 325 MG Oral Tablet"},
};

constexpr std::array kVaccines = {
    Concept{kCvx, "140", "Influenza, seasonal, injectable, preservative free"},
    Concept{kCvx, "113", "Td (adult) preservative free"},
    Concept{kCvx, "208", "SARS-COV-2 (COVID-19) vaccine, mRNA, spike protein, LNP, preservative free, 30 mcg/0.3mL dose"},
    Concept{kCvx, "133", "Pneumococcal conjugate PCV 13"},
};

constexpr std::array kEncounterTypes = {
    Concept{kSnomed, "162673000", "General examination of patient (procedure)"},
    Concept{kSnomed, "185345009", "Encounter for symptom"},
    Concept{kSnomed, "50849002", "Emergency room admission (procedure)"},
    Concept{kSnomed, "410620009", "Well child visit (procedure)"},
};

constexpr std::array kImaging = {
    Concept{kSnomed, "399208008", "Plain chest X-ray (procedure)"},
    Concept{kSnomed, "241615005", "Magnetic resonance imaging of knee"},
};

constexpr std::array kDevices = {
    Concept{kSnomed, "72506001", "Implantable defibrillator, device (physical object)"},
    Concept{kSnomed, "706180003", "Respiratory humidifier (physical object)"},
    Concept{kSnomed, "337414009", "Blood glucose meter (physical object)"},
};

constexpr std::array kCarePlans = {
    Concept{kSnomed, "698360004", "Diabetes self management plan"},
    Concept{kSnomed, "53950000", "Respiratory therapy"},
    Concept{kSnomed, "443402002", "Lifestyle education regarding hypertension (procedure)"},
};

constexpr std::array kAllergies = {
    Concept{kSnomed, "300916003", "Latex allergy"},
    Concept{kSnomed, "91935009", "Allergy to peanuts"},
    Concept{kSnomed, "419474003", "Allergy to mould"},
};

constexpr std::array kReports = {
    Concept{kLoinc, "51990-0", "Basic Metabolic Panel"},
    Concept{kLoinc, "57698-3", "Lipid Panel"},
    Concept{kLoinc, "58410-2", "Complete blood count (hemogram) panel - Blood by Automated count"},
};

template <std::size_t N>
const Concept& pick(Rng& rng, const std::array<Concept, N>& items) {
    return items[rng.below(N)];
}

Json codeable(const Concept& c) {
    return Json{{"coding", Json::array({Json{{"system", c.system}, {"code", c.code}, {"display", c.display}}})},
                {"text", c.display}};
}

std::string hex_id(Rng& rng) {
    const std::uint64_t a = rng.next();
    const std::uint64_t b = rng.next();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(a >> 32),
                  static_cast<unsigned>((a >> 16) & 0xffff), static_cast<unsigned>(a & 0xffff),
                  static_cast<unsigned>(b >> 48), static_cast<unsigned long long>(b & 0xffffffffffffULL));
    return buf;
}

// Days since 1970-01-01 to civil date.
std::string iso_date(std::int64_t days) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const auto doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
    return buf;
}

std::string timestamp(Rng& rng) {
    const std::int64_t day = 10957 + static_cast<std::int64_t>(rng.below(8766));  // 2000-01-01 .. 2023
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%02u:%02u:%02u-05:00", static_cast<unsigned>(rng.below(24)),
                  static_cast<unsigned>(rng.below(60)), static_cast<unsigned>(rng.below(60)));
    return iso_date(day) + buf;
}

Json base(std::string_view type, const std::string& id) {
    return Json{{"resourceType", type},
                {"id", id},
                {"meta", Json{{"profile", Json::array({"http://hl7.org/fhir/us/core/StructureDefinition/us-core-" +
                                                       std::string(type)})}}}};
}

Json narrative(std::string_view type) {
    return Json{{"status", "generated"},
                {"div", "<div xmlns=\"http://www.w3.org/1999/xhtml\">Generated " + std::string(type) + "</div>"}};
}

Json reference(const std::string& id) { return Json{{"reference", "urn:uuid:" + id}}; }

Json clinical(std::size_t kind, Rng& rng, const std::string& patient, const std::string& encounter) {
    const std::string id = hex_id(rng);
    const std::string when = timestamp(rng);
    switch (kind) {
        case 0: {  // Condition
            Json r = base("Condition", id);
            r["clinicalStatus"] = Json{{"coding", Json::array({Json{
                {"system", "http://terminology.hl7.org/CodeSystem/condition-clinical"}, {"code", "active"}}})}};
            r["verificationStatus"] = Json{{"coding", Json::array({Json{
                {"system", "http://terminology.hl7.org/CodeSystem/condition-ver-status"}, {"code", "confirmed"}}})}};
            r["code"] = codeable(pick(rng, kConditions));
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["onsetDateTime"] = when;
            r["recordedDate"] = when;
            return r;
        }
        case 1: {  // Observation
            const Measure& m = kObservations[rng.below(kObservations.size())];
            Json r = base("Observation", id);
            r["status"] = "final";
            r["category"] = Json::array({Json{{"coding", Json::array({Json{
                {"system", "http://terminology.hl7.org/CodeSystem/observation-category"},
                {"code", "vital-signs"}, {"display", "vital-signs"}}})}}});
            r["code"] = codeable(m.code);
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["effectiveDateTime"] = when;
            r["issued"] = when.substr(0, 19) + ".000-05:00";
            const double value = m.low + (m.high - m.low) * static_cast<double>(rng.below(1000)) / 1000.0;
            r["valueQuantity"] = Json{{"value", static_cast<double>(static_cast<long long>(value * 100)) / 100.0},
                                      {"unit", m.unit},
                                      {"system", "http://unitsofmeasure.org"},
                                      {"code", m.unit}};
            if (rng.below(3) == 0) {
                r["extension"] = Json::array({Json{{"url", "http://synthetichealth.github.io/synthea/note"},
                                                   {"valueString", "auto-generated"}}});
            }
            return r;
        }
        case 2: {  // Procedure
            Json r = base("Procedure", id);
            r["status"] = "completed";
            r["code"] = codeable(pick(rng, kProcedures));
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["performedPeriod"] = Json{{"start", when}, {"end", when}};
            return r;
        }
        case 3: {  // MedicationRequest
            Json r = base("MedicationRequest", id);
            r["status"] = rng.below(2) ? "active" : "stopped";
            r["intent"] = "order";
            r["medicationCodeableConcept"] = codeable(pick(rng, kMedications));
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["authoredOn"] = when;
            r["requester"] = Json{{"reference", "Practitioner?identifier=http://hl7.org/fhir/sid/us-npi|9999"},
                                  {"display", "Dr. Adam Smith"}};
            r["dosageInstruction"] = Json::array({Json{{"sequence", 1}, {"asNeededBoolean", false},
                {"timing", Json{{"repeat", Json{{"frequency", 1}, {"period", 1}, {"periodUnit", "d"}}}}}}});
            return r;
        }
        case 4: {  // Encounter
            Json r = base("Encounter", id);
            r["status"] = "finished";
            r["class"] = Json{{"system", "http://terminology.hl7.org/CodeSystem/v3-ActCode"}, {"code", "AMB"}};
            r["type"] = Json::array({codeable(pick(rng, kEncounterTypes))});
            r["subject"] = reference(patient);
            r["period"] = Json{{"start", when}, {"end", when}};
            r["serviceProvider"] = Json{{"reference", "Organization?identifier=x|1"}, {"display", "GENERAL HOSPITAL"}};
            return r;
        }
        case 5: {  // ImagingStudy
            const Concept& c = pick(rng, kImaging);
            Json r = base("ImagingStudy", id);
            r["identifier"] = Json::array({Json{{"use", "official"}, {"system", "urn:ietf:rfc:3986"},
                                                {"value", "urn:oid:1.2.840.99999999." + id.substr(0, 8)}}});
            r["status"] = "available";
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["started"] = when;
            r["numberOfSeries"] = 1;
            r["numberOfInstances"] = 1 + rng.below(3);
            r["procedureCode"] = Json::array({codeable(c)});
            r["series"] = Json::array({Json{{"uid", "1.2.840.99999999.1"},
                {"modality", Json{{"system", "http://dicom.nema.org/resources/ontology/DCM"}, {"code", "DX"},
                                  {"display", "Digital Radiography"}}},
                {"bodySite", Json{{"system", kSnomed}, {"code", "51185008"}, {"display", "Thoracic structure"}}}}});
            return r;
        }
        case 6: {  // Immunization
            Json r = base("Immunization", id);
            r["status"] = "completed";
            r["vaccineCode"] = codeable(pick(rng, kVaccines));
            r["patient"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["occurrenceDateTime"] = when;
            r["primarySource"] = true;
            return r;
        }
        case 7: {  // Device
            const Concept& c = pick(rng, kDevices);
            Json r = base("Device", id);
            r["udiCarrier"] = Json::array({Json{{"deviceIdentifier", "21779939575834"}, {"carrierHRF", "(01)21779939575834"}}});
            r["status"] = "active";
            r["distinctIdentifier"] = "21779939575834";
            r["manufactureDate"] = when;
            r["expirationDate"] = timestamp(rng);
            r["lotNumber"] = std::to_string(rng.below(1000000));
            r["deviceName"] = Json::array({Json{{"name", c.display}, {"type", "user-friendly-name"}}});
            r["type"] = codeable(c);
            r["patient"] = reference(patient);
            return r;
        }
        case 8: {  // CarePlan
            Json r = base("CarePlan", id);
            r["text"] = narrative("CarePlan");
            r["status"] = "active";
            r["intent"] = "order";
            r["category"] = Json::array({Json{{"coding", Json::array({Json{{"system", kSnomed},
                {"code", "736353004"}, {"display", "Care Plan"}}})}}, codeable(pick(rng, kCarePlans))});
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["period"] = Json{{"start", when}};
            r["activity"] = Json::array({Json{{"detail", Json{{"code", codeable(pick(rng, kProcedures))},
                                                              {"status", "in-progress"}}}}});
            return r;
        }
        case 9: {  // ExplanationOfBenefit
            Json r = base("ExplanationOfBenefit", id);
            r["status"] = "active";
            r["type"] = Json{{"coding", Json::array({Json{{"system", "http://terminology.hl7.org/CodeSystem/claim-type"},
                                                          {"code", "professional"}}})}};
            r["use"] = "claim";
            r["patient"] = reference(patient);
            r["billablePeriod"] = Json{{"start", when}, {"end", when}};
            r["created"] = when;
            r["insurer"] = Json{{"display", "Medicaid"}};
            r["item"] = Json::array({Json{{"sequence", 1},
                {"productOrService", codeable(pick(rng, kEncounterTypes))},
                {"net", Json{{"value", 100 + static_cast<double>(rng.below(90000)) / 100.0}, {"currency", "USD"}}}}});
            r["total"] = Json::array({Json{{"category", Json{{"coding", Json::array({Json{{"code", "submitted"}}})}}},
                                           {"amount", Json{{"value", 129.16}, {"currency", "USD"}}}}});
            return r;
        }
        case 10: {  // AllergyIntolerance
            Json r = base("AllergyIntolerance", id);
            r["clinicalStatus"] = Json{{"coding", Json::array({Json{
                {"system", "http://terminology.hl7.org/CodeSystem/allergyintolerance-clinical"}, {"code", "active"}}})}};
            r["type"] = "allergy";
            r["category"] = Json::array({"environment"});
            r["criticality"] = "low";
            r["code"] = codeable(pick(rng, kAllergies));
            r["patient"] = reference(patient);
            r["recordedDate"] = when;
            return r;
        }
        default: {  // DiagnosticReport
            Json r = base("DiagnosticReport", id);
            r["status"] = "final";
            r["code"] = codeable(pick(rng, kReports));
            r["subject"] = reference(patient);
            r["encounter"] = reference(encounter);
            r["effectiveDateTime"] = when;
            r["issued"] = when.substr(0, 19) + ".000-05:00";
            r["result"] = Json::array({Json{{"reference", "urn:uuid:" + hex_id(rng)}, {"display", "Glucose"}},
                                       Json{{"reference", "urn:uuid:" + hex_id(rng)}, {"display", "Calcium"}}});
            return r;
        }
    }
}

Json entry(Json resource) {
    std::string url = "urn:uuid:" + resource["id"].get<std::string>();
    return Json{{"fullUrl", std::move(url)},
                {"resource", std::move(resource)},
                {"request", Json{{"method", "POST"}, {"url", "Resource"}}}};
}

}  // namespace

std::string synthetic_patient_id(std::size_t index, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "patient:" + std::to_string(index)));
    return hex_id(rng);
}

std::string synthetic_bundle(std::size_t index, const SyntheticCorpusOptions& options) {
    Rng rng(derive_seed(options.seed, "bundle:" + std::to_string(index)));
    const std::string patient = synthetic_patient_id(index, options.seed);

    Json entries = Json::array();
    Json p = base("Patient", patient);
    p["text"] = narrative("Patient");
    p["name"] = Json::array({Json{{"family", "Doe" + std::to_string(index)}, {"given", Json::array({"Alex"})}}});
    p["gender"] = rng.below(2) ? "female" : "male";
    p["birthDate"] = iso_date(-3650 + static_cast<std::int64_t>(rng.below(14600)));
    entries.push_back(entry(std::move(p)));

    const std::size_t span = options.max_resources > options.min_resources
                                 ? options.max_resources - options.min_resources + 1
                                 : 1;
    const std::size_t n = options.min_resources + rng.below(span);
    std::string encounter = hex_id(rng);
    for (std::size_t i = 0; i < n; ++i) {
        // Cycle through all types first so every bundle covers the whole set.
        const std::size_t kind = i < 12 ? i : rng.below(12);
        Json r = clinical(kind, rng, patient, encounter);
        if (kind == 4) encounter = r["id"].get<std::string>();
        entries.push_back(entry(std::move(r)));
    }

    if (options.noise) {
        Json supply = base("SupplyDelivery", hex_id(rng));
        supply["status"] = "completed";
        supply["patient"] = reference(patient);
        entries.push_back(entry(std::move(supply)));
        Json claim = base("Claim", hex_id(rng));
        claim["status"] = "active";
        claim["patient"] = reference(patient);
        entries.push_back(entry(std::move(claim)));
        Json prov = base("Provenance", hex_id(rng));
        prov["recorded"] = timestamp(rng);
        entries.push_back(entry(std::move(prov)));
        Json med = base("Medication", hex_id(rng));
        med["status"] = "active";
        med["code"] = codeable(pick(rng, kMedications));
        entries.push_back(entry(std::move(med)));
    }

    Json bundle{{"resourceType", "Bundle"}, {"type", "transaction"}, {"entry", std::move(entries)}};
    return bundle.dump(2);
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& directory,
                                                          const SyntheticCorpusOptions& options) {
    std::filesystem::create_directories(directory);
    std::vector<std::filesystem::path> paths;
    paths.reserve(options.patients);
    for (std::size_t i = 0; i < options.patients; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "patient_%05zu.json", i);
        auto path = directory / name;
        write_file(path, synthetic_bundle(i, options));
        paths.push_back(std::move(path));
    }
    return paths;
}

}  // namespace fhirqa
