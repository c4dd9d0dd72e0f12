#include <benchmark/benchmark.h>

#include "fhirqa/fhir.hpp"
#include "fhirqa/synthetic.hpp"

namespace {

void BM_ParseBundle(benchmark::State& state) {
    fhirqa::SyntheticCorpusOptions o;
    const auto bundle = fhirqa::synthetic_bundle(0, o);
    for (auto _ : state) benchmark::DoNotOptimize(fhirqa::parse_bundle(bundle));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bundle.size()));
}
BENCHMARK(BM_ParseBundle);

void BM_IngestBundle(benchmark::State& state) {
    fhirqa::SyntheticCorpusOptions o;
    const auto bundle = fhirqa::synthetic_bundle(0, o);
    const auto& rules = fhirqa::RetentionRuleset::default_rules();
    for (auto _ : state) {
        fhirqa::CorpusSummary summary;
        benchmark::DoNotOptimize(fhirqa::ingest_bundle(bundle, rules, "bench", summary));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bundle.size()));
}
BENCHMARK(BM_IngestBundle);

}  // namespace
