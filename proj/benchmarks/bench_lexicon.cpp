#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "predo/lexicon.hpp"

namespace {

using namespace predo::lexicon;

// Full WordNet when PREDO_WORDNET_DIR points at one, the test fixture otherwise.
const Lexicon& lexicon() {
  static const Lexicon lex = [] {
    const char* env = std::getenv("PREDO_WORDNET_DIR");
    const std::filesystem::path dir = env ? env : PREDO_BENCH_MINI_WORDNET;
    return Lexicon::load_wordnet(dir);
  }();
  return lex;
}

void BM_WupRandomPairs(benchmark::State& state) {
  const auto& lex = lexicon();
  const auto& lemmas = lex.lemmas(PartOfSpeech::noun);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, lemmas.size() - 1);
  for (auto _ : state) {
    const auto a = *lex.first_sense(lemmas[pick(rng)], PartOfSpeech::noun);
    const auto b = *lex.first_sense(lemmas[pick(rng)], PartOfSpeech::noun);
    benchmark::DoNotOptimize(wup_similarity(lex, a, b));
  }
}
BENCHMARK(BM_WupRandomPairs);

void BM_NearestNoun(benchmark::State& state) {
  const auto& lex = lexicon();
  const SimilarityIndex index(lex, *lex.first_sense("wing", PartOfSpeech::noun), PartOfSpeech::noun);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.nearest(t));
    t = t >= 1.0 ? 0.0 : t + 0.013;
  }
}
BENCHMARK(BM_NearestNoun);

void BM_SelectToken(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const TokenProjector projector(7, 16, vocab);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<double> z(16);
  for (auto _ : state) {
    for (auto& v : z) v = n(rng);
    benchmark::DoNotOptimize(projector.select_token(z));
  }
}
BENCHMARK(BM_SelectToken)->Arg(64)->Arg(100256);

}  // namespace
