#include <benchmark/benchmark.h>

#include <memory>

#include "zerostat/zeros.hpp"

using namespace zerostat;

namespace {

std::vector<Complex> coefficients(int N, std::uint64_t t) {
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
  Rng rng = trial_stream(1, N, t);
  return sample_section(spec, rng).univariate_coefficients();
}

void BM_Aberth(benchmark::State& state) {
  const auto a = coefficients(static_cast<int>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(roots_cp1(a));
}
BENCHMARK(BM_Aberth)->Arg(10)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

void BM_Companion(benchmark::State& state) {
  const auto a = coefficients(static_cast<int>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(companion_roots(a));
}
BENCHMARK(BM_Companion)->Arg(10)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

void BM_System2d(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(2, N));
  Rng rng = trial_stream(2, N);
  const auto f = sample_section(spec, rng), g = sample_section(spec, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_system_2d(f, g));
}
BENCHMARK(BM_System2d)->Arg(3)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
