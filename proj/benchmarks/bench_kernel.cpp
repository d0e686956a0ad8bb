#include <benchmark/benchmark.h>

#include "zerostat/kernel.hpp"

using namespace zerostat;

namespace {

void BM_KernelFull(benchmark::State& state) {
  const Complex z[1] = {Complex(0.3, 0.2)}, w[1] = {Complex(-0.1, 0.5)};
  const int N = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernel_full(1, N, z, w));
}
BENCHMARK(BM_KernelFull)->Arg(100)->Arg(1000);

void BM_KernelSum(benchmark::State& state) {
  const auto spec = EnsembleSpec::full(2, static_cast<int>(state.range(0)));
  const Complex z[2] = {Complex(0.3, 0.2), 0.1}, w[2] = {Complex(-0.1, 0.5), Complex(0, 0.4)};
  for (auto _ : state) benchmark::DoNotOptimize(kernel(spec, z, w));
}
BENCHMARK(BM_KernelSum)->Arg(10)->Arg(40);

void BM_ExpectedDensityPolytope(benchmark::State& state) {
  const auto spec = EnsembleSpec::constrained(1, 200, dilate(LatticePolytope::interval(1, 3), 50));
  const Complex z[1] = {0.8};
  for (auto _ : state) benchmark::DoNotOptimize(expected_density(spec, z));
}
BENCHMARK(BM_ExpectedDensityPolytope);

}  // namespace

BENCHMARK_MAIN();
