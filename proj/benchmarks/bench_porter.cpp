#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "fhirqa/porter.hpp"

namespace {

void BM_PorterStem(benchmark::State& state) {
    const std::vector<std::string> words{"caresses", "relational", "generalizations", "hopefulness", "running",
                                         "immunizations", "medications", "conditional", "observations", "sky"};
    for (auto _ : state) {
        for (const auto& w : words) benchmark::DoNotOptimize(fhirqa::porter_stem(w));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(words.size()));
}
BENCHMARK(BM_PorterStem);

}  // namespace
