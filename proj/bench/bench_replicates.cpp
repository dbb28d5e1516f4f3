// Serial reference loop against the OpenMP replicate loop on the same work.

#include <benchmark/benchmark.h>

#include "xicoal/chains.hpp"
#include "xicoal/random.hpp"

using namespace xicoal;

namespace {

const RateEngine& engine() {
  static RateEngine e(parse_model("dirichlet:N=3,alpha=1"));
  return e;
}

void run_paths(benchmark::State& state, int threads) {
  ChainSimulator sim(engine());
  Rng warm = substream(0, 0);
  sim.N_at(200, 0.5, warm);  // fill the row cache outside the timed loop
  for (auto _ : state) {
    auto values = run_replicates(state.range(0), 42, threads, [&](Rng& rng, long) { return sim.N_at(200, 0.5, rng); });
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_serial(benchmark::State& state) { run_paths(state, 1); }
void BM_openmp(benchmark::State& state) { run_paths(state, default_threads()); }

}  // namespace

BENCHMARK(BM_serial)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_openmp)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
