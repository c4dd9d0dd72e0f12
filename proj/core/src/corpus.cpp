#include <algorithm>
#include <set>
#include <thread>

#include "fhirqa/error.hpp"
#include "fhirqa/fhir.hpp"
#include "fhirqa/parallel.hpp"

namespace fhirqa {
namespace {

void merge_counts(std::map<std::string, std::size_t>& into, const std::map<std::string, std::size_t>& from) {
    for (const auto& [k, v] : from) into[k] += v;
}

void merge(CorpusSummary& into, const CorpusSummary& from) {
    into.files += from.files;
    into.patients += from.patients;
    into.resources += from.resources;
    merge_counts(into.kept, from.kept);
    merge_counts(into.unsupported, from.unsupported);
    merge_counts(into.empty, from.empty);
    merge_counts(into.unlinked, from.unlinked);
    merge_counts(into.foreign, from.foreign);
    into.duplicate_ids += from.duplicate_ids;
}

}  // namespace

Json to_json(const CorpusSummary& s) {
    return Json{{"files", s.files},
                {"patients", s.patients},
                {"resources", s.resources},
                {"kept", s.kept},
                {"unsupported", s.unsupported},
                {"empty_after_compaction", s.empty},
                {"unlinked", s.unlinked},
                {"foreign", s.foreign},
                {"duplicate_ids", s.duplicate_ids}};
}

PatientRecord ingest_bundle(std::string_view bytes, const RetentionRuleset& rules, const std::string& source,
                            CorpusSummary& summary) {
    const auto raw = parse_bundle(bytes);

    PatientRecord record;
    for (const auto& r : raw) {
        if (r.type == "Patient" && r.resource.contains("id") && r.resource["id"].is_string()) {
            record.patient_id = r.resource["id"].get<std::string>();
            break;
        }
    }

    FilterSummary fs;
    const auto supported = filter_supported(raw, &fs);
    merge_counts(summary.unsupported, fs.dropped);

    std::set<std::string> seen;
    for (const auto& r : supported) {
        CompactResource c;
        try {
            c = compact_resource(r, rules);
        } catch (const IngestError&) {
            ++summary.unlinked[r.type];
            continue;
        }
        if (record.patient_id.empty()) record.patient_id = c.patient_id;
        if (c.patient_id != record.patient_id) {
            ++summary.foreign[r.type];
            continue;
        }
        if (c.body.empty()) {
            ++summary.empty[r.type];
            continue;
        }
        if (!seen.insert(c.resource_id).second) {
            ++summary.duplicate_ids;
            continue;
        }
        ++summary.kept[r.type];
        record.resources.push_back(std::move(c));
    }
    if (record.patient_id.empty()) record.patient_id = source;
    summary.files += 1;
    summary.patients += 1;
    summary.resources += record.resources.size();
    return record;
}

Corpus load_corpus(const std::filesystem::path& directory, const RetentionRuleset& rules, std::size_t threads) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw IoError("not a directory: " + directory.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.empty()) throw ValidationError("no patient bundles (*.json) in " + directory.string());

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<PatientRecord> records(files.size());
    std::vector<CorpusSummary> summaries(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        const auto& path = files[i];
        try {
            records[i] = ingest_bundle(read_file(path), rules, path.stem().string(), summaries[i]);
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            throw IoError(path.string() + ": " + e.what());
        }
    });

    Corpus corpus;
    corpus.records = std::move(records);
    for (const auto& s : summaries) merge(corpus.summary, s);
    return corpus;
}

void write_corpus(const std::filesystem::path& path, const std::vector<PatientRecord>& records) {
    write_json_lines(path, to_json_rows(records));
}

std::vector<PatientRecord> read_corpus(const std::filesystem::path& path) {
    std::vector<PatientRecord> out;
    for (const auto& row : read_json_lines(path)) out.push_back(patient_record_from_json(row));
    return out;
}

}  // namespace fhirqa
