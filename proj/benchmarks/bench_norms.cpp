#include <benchmark/benchmark.h>

#include <memory>

#include "zerostat/norms.hpp"

using namespace zerostat;

namespace {

SectionSample sample(int N) {
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
  Rng rng = trial_stream(3, N);
  return sample_section(spec, rng);
}

void BM_L4(benchmark::State& state) {
  const auto s = sample(static_cast<int>(state.range(0)));
  Quadrature q;
  q.check_resolution = false;
  for (auto _ : state) benchmark::DoNotOptimize(lp_norm(s, 4.0, q));
}
BENCHMARK(BM_L4)->Arg(64)->Arg(256)->Arg(1024);

void BM_Sup(benchmark::State& state) {
  const auto s = sample(static_cast<int>(state.range(0)));
  Quadrature q;
  q.check_resolution = false;
  for (auto _ : state) benchmark::DoNotOptimize(lp_norm(s, kInfinity, q));
}
BENCHMARK(BM_Sup)->Arg(64)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
