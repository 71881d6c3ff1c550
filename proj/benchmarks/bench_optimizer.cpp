#include <benchmark/benchmark.h>

#include "predo/optimizer.hpp"

namespace {

// One ask/tell cycle on the sphere at the run dimensions (2 for
// bag-of-words, 256 for 16 tokens x 16 latent).
void BM_CmaGeneration(benchmark::State& state) {
  predo::optimizer::OptimizerConfig cfg;
  cfg.dimension = static_cast<int>(state.range(0));
  cfg.max_generations = 1 << 30;
  cfg.seed = 1;
  auto s = predo::optimizer::cma_init(cfg);
  std::vector<double> fit(static_cast<std::size_t>(cfg.population_size));
  for (auto _ : state) {
    const auto pop = predo::optimizer::cma_ask(s, cfg);
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = pop[i].squaredNorm();
    predo::optimizer::cma_tell(s, cfg, pop, fit);
  }
}
BENCHMARK(BM_CmaGeneration)->Arg(2)->Arg(16)->Arg(256);

}  // namespace
