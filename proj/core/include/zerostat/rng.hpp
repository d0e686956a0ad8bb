#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace zerostat {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream for `trial` under `master_seed`. The derivation is
/// counter based, so trial t draws the same numbers no matter how many
/// trials or workers a run uses.
Rng trial_stream(std::uint64_t master_seed, std::uint64_t trial);

/// Same, with an extra stream label (e.g. the degree in a series).
Rng trial_stream(std::uint64_t master_seed, std::uint64_t label, std::uint64_t trial);

/// Standard complex Gaussian: independent N(0, 1/2) real and imaginary parts.
std::complex<double> standard_complex_gaussian(Rng& rng);

}  // namespace zerostat
