#include <benchmark/benchmark.h>

#include <random>

#include "fhirqa/meteor.hpp"

namespace {

std::string sentence(std::mt19937_64& gen, std::size_t words, std::size_t vocabulary) {
    static const char* pool[] = {"your", "blood", "pressure", "was", "normal", "on", "the", "last", "visit", "you",
                                 "take", "aspirin", "daily", "allergy", "to", "penicillin", "recorded", "in", "june",
                                 "shot", "flu", "height", "cm", "doctor", "medication", "result", "test", "a", "of"};
    const std::size_t n = std::min<std::size_t>(vocabulary, std::size(pool));
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += ' ';
        s += pool[gen() % n];
    }
    return s;
}

void BM_MeteorSentence(benchmark::State& state) {
    std::mt19937_64 gen(1);
    const auto words = static_cast<std::size_t>(state.range(0));
    const auto cand = sentence(gen, words, 29);
    const auto ref = sentence(gen, words, 29);
    for (auto _ : state) benchmark::DoNotOptimize(fhirqa::meteor(cand, ref));
}
BENCHMARK(BM_MeteorSentence)->Arg(10)->Arg(30)->Arg(80);

// A small vocabulary means many repeated tokens, the hard case for chunk minimization.
void BM_MeteorRepetitive(benchmark::State& state) {
    std::mt19937_64 gen(2);
    const auto words = static_cast<std::size_t>(state.range(0));
    const auto cand = fhirqa::tokenize(sentence(gen, words, 4));
    const auto ref = fhirqa::tokenize(sentence(gen, words, 4));
    for (auto _ : state) benchmark::DoNotOptimize(fhirqa::meteor_align(cand, ref));
}
BENCHMARK(BM_MeteorRepetitive)->Arg(8)->Arg(16)->Arg(32);

void BM_CorpusMeteor(benchmark::State& state) {
    std::mt19937_64 gen(3);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int i = 0; i < 100; ++i) pairs.emplace_back(sentence(gen, 25, 29), sentence(gen, 25, 29));
    for (auto _ : state) benchmark::DoNotOptimize(fhirqa::corpus_meteor(pairs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_CorpusMeteor);

}  // namespace
