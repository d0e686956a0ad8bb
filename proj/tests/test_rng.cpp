#include <doctest.h>

#include <cmath>

#include "zerostat/rng.hpp"

using namespace zerostat;

TEST_CASE("splitmix64 reference output") {
  // first output of the reference generator seeded with 0
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(1) != splitmix64(2));
}

TEST_CASE("trial streams are counter based") {
  Rng a = trial_stream(42, 7), b = trial_stream(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  CHECK(trial_stream(42, 7)() != trial_stream(42, 8)());
  CHECK(trial_stream(42, 7)() != trial_stream(43, 7)());
  CHECK(trial_stream(42, 1, 7)() != trial_stream(42, 2, 7)());
  CHECK(trial_stream(42, 0, 7)() == trial_stream(42, 7)());
}

TEST_CASE("neighbouring streams are uncorrelated") {
  constexpr int n = 20000;
  double sxy = 0.0;
  for (int t = 0; t < n; ++t) {
    Rng a = trial_stream(5, t), b = trial_stream(5, t + 1);
    const double x = std::real(standard_complex_gaussian(a)), y = std::real(standard_complex_gaussian(b));
    sxy += x * y;
  }
  // each product has variance 1/4
  CHECK(std::abs(sxy / n) < 4.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("standard complex Gaussian moments") {
  Rng rng = trial_stream(9, 0);
  constexpr int n = 1'000'000;
  std::complex<double> mean = 0.0, square = 0.0;
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto z = standard_complex_gaussian(rng);
    mean += z;
    square += z * z;
    power += std::norm(z);
  }
  const double se = 1.0 / std::sqrt(double(n));
  CHECK(std::abs(mean / double(n)) < 4.0 * se);
  CHECK(std::abs(square / double(n)) < 4.0 * se * std::sqrt(2.0));
  // |z|^2 is exponential with unit mean and variance
  CHECK(std::abs(power / n - 1.0) < 4.0 * se);
}
