#include "zerostat/rng.hpp"

#include <cmath>

namespace zerostat {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng trial_stream(std::uint64_t master_seed, std::uint64_t trial) {
  return trial_stream(master_seed, 0, trial);
}

Rng trial_stream(std::uint64_t master_seed, std::uint64_t label, std::uint64_t trial) {
  const std::uint64_t a = splitmix64(master_seed ^ splitmix64(label + 0x51ed2701ULL));
  const std::uint64_t b = splitmix64(a ^ splitmix64(trial));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Rng(seq);
}

std::complex<double> standard_complex_gaussian(Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

}  // namespace zerostat
