#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "zerostat/errors.hpp"
#include "zerostat/norms.hpp"

using namespace zerostat;
using testing::from_chart;
using testing::full_spec;

namespace {

using Chart1 = std::map<MonomialIndex, Complex, GradedLexLess>;

SectionSample monomial(int N, int k) { return from_chart(full_spec(1, N), Chart1{{MonomialIndex{k}, 1.0}}); }

// ||z^k||_p / ||z^k||_2 in degree N: |z^k|_h^2 = mu^k (1-mu)^(N-k), so both sides are Beta integrals.
double monomial_ratio(int N, int k, double p) {
  auto log_beta = [](double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); };
  return std::exp(log_beta(k * p / 2 + 1, (N - k) * p / 2 + 1) / p - 0.5 * log_beta(k + 1, N - k + 1));
}

// ||s||_4^4 is the squared L^2 norm of s^2 in degree 2N: expand the square and
// sum against the degree-2N monomial norms.
double l4_ratio_by_convolution(const SectionSample& s) {
  const int N = s.spec->degree();
  const auto a = s.univariate_coefficients();
  std::vector<std::complex<long double>> sq(2 * N + 1, 0.0L);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) sq[i + j] += std::complex<long double>(a[i]) * std::complex<long double>(a[j]);
  long double l4 = 0.0L, l2 = 0.0L;
  for (int k = 0; k <= 2 * N; ++k) l4 += std::norm(sq[k]) * std::exp(testing::log_norm_sq_cp1(2 * N, k));
  for (int k = 0; k <= N; ++k) l2 += std::norm(std::complex<long double>(a[k])) * std::exp(testing::log_norm_sq_cp1(N, k));
  return double(std::pow(l4, 0.25L) / std::sqrt(l2));
}

}  // namespace

TEST_CASE("the L2 ratio is one") {
  for (int N : {1, 7, 40, 200}) {
    Rng rng = trial_stream(2, N);
    const auto s = sample_section(full_spec(1, N), rng);
    CHECK(lp_norm(s, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("monomials: closed-form norms") {
  for (int N : {10, 30, 64}) {
    for (double p : {1.0, 3.0, 4.0, 6.0}) {
      CHECK(lp_norm(monomial(N, N), p) == doctest::Approx(monomial_ratio(N, N, p)).epsilon(1e-6));
      CHECK(lp_norm(monomial(N, N / 2), p) == doctest::Approx(monomial_ratio(N, N / 2, p)).epsilon(1e-6));
    }
    // z^N: |z^N|_h = mu^{N/2} increases to the point at infinity, where it equals 1
    CHECK(lp_norm(monomial(N, N), kInfinity) == doctest::Approx(std::sqrt(N + 1.0)).epsilon(1e-6));
    // z^{N/2}: the maximum sits on |z| = 1, with value 2^{-N/2}
    const double peak = std::pow(2.0, -N / 2.0) / std::exp(0.5 * testing::log_norm_sq_cp1(N, N / 2));
    CHECK(lp_norm(monomial(N, N / 2), kInfinity) == doctest::Approx(peak).epsilon(1e-6));
  }
}

TEST_CASE("L4 against the squared section") {
  for (int N : {5, 25, 100}) {
    Rng rng = trial_stream(44, N);
    const auto s = sample_section(full_spec(1, N), rng);
    const double oracle = l4_ratio_by_convolution(s);
    CHECK(lp_norm(s, 4.0) == doctest::Approx(oracle).epsilon(1e-10));
    // a grid four times finer in both directions agrees
    Quadrature fine;
    fine.mu_nodes = 4 * (N + 1);
    fine.theta_nodes = 8 * (2 * N + 1);
    fine.check_resolution = false;
    CHECK(lp_norm(s, 4.0, fine) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("norm ratios increase with p") {
  for (int N : {20, 80}) {
    Rng rng = trial_stream(45, N);
    const auto s = sample_section(full_spec(1, N), rng);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0, 8.0, kInfinity}) {
      const double v = lp_norm(s, p);
      CHECK(v >= prev * (1.0 - 1e-9));
      prev = v;
    }
  }
}

TEST_CASE("the sup norm dominates a dense sample") {
  Rng rng = trial_stream(46, 0);
  const auto s = sample_section(full_spec(1, 60), rng);
  const double sup = lp_norm(s, kInfinity) * l2_norm(s);
  double best = 0.0;
  for (int i = 1; i < 2000; ++i) {
    const double mu = i / 2000.0, r = std::sqrt(mu / (1 - mu));
    for (int j = 0; j < 2000; ++j) {
      const Complex z[1] = {std::polar(r, 2 * std::numbers::pi * j / 2000)};
      best = std::max(best, hermitian_magnitude(s, z));
    }
  }
  CHECK(sup >= best * (1.0 - 1e-12));
  CHECK(sup <= best * 1.01);
}

TEST_CASE("resolution checks") {
  Rng rng = trial_stream(47, 0);
  const auto s = sample_section(full_spec(1, 50), rng);
  Quadrature coarse;
  coarse.mu_nodes = 3;
  coarse.theta_nodes = 4;
  CHECK_THROWS_AS(lp_norm(s, 4.0, coarse), ResolutionError);
  coarse.check_resolution = false;
  CHECK_NOTHROW(lp_norm(s, 4.0, coarse));
  CHECK_THROWS_AS(lp_norm(s, 0.5), std::invalid_argument);
}

TEST_CASE("spherical caps") {
  // z^N on the cap mu < c around the origin: mean of mu^{Np/2} over [0, c]
  const int N = 20;
  const auto s = monomial(N, N);
  for (double p : {2.0, 4.0}) {
    const double c = 0.3;
    const double expected = std::pow(std::pow(c, N * p / 2) / (N * p / 2 + 1), 1.0 / p) * std::sqrt(N + 1.0);
    CHECK(cap_lp_norm(s, p, 0.0, c) == doctest::Approx(expected).epsilon(1e-10));
  }
  // rotations act on coefficients by phases: a_k -> a_k e^{-ik theta}
  Rng rng = trial_stream(48, 0);
  const auto t = sample_section(full_spec(1, 30), rng);
  auto rot = t;
  const double theta = 0.9;
  for (std::size_t i = 0; i < rot.coeffs.size(); ++i)
    rot.coeffs[i] *= std::polar(1.0, -theta * rot.spec->basis()[i][0]);
  const Complex centre(0.4, -0.7);
  CHECK(cap_lp_norm(rot, 4.0, centre * std::polar(1.0, theta), 0.2) ==
        doctest::Approx(cap_lp_norm(t, 4.0, centre, 0.2)).epsilon(1e-9));
  // the whole sphere
  CHECK(cap_lp_norm(t, 4.0, centre, 1.0, 128, 512) == doctest::Approx(lp_norm(t, 4.0)).epsilon(1e-8));
  CHECK_THROWS_AS(cap_lp_norm(t, 4.0, centre, 0.0), std::invalid_argument);
}

TEST_CASE("growth series") {
  GrowthOptions o;
  o.degrees = {16, 32};
  o.trials = 8;
  o.p = 2.0;
  o.master_seed = 5;
  const auto s = growth_series(o);
  for (double m : s.means) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  o.p = kInfinity;
  const auto a = growth_series(o);
  o.workers = 3;
  const auto b = growth_series(o);
  CHECK(a.means == b.means);
  CHECK(a.stderrs == b.stderrs);
  // the first degree's stream does not depend on the other degrees in the list
  o.degrees = {16};
  CHECK(growth_series(o).means[0] == a.means[0]);
  o.degrees = {8, 32};
  CHECK_THROWS_AS(growth_series(o), std::invalid_argument);
  o.degrees = {32, 16};
  CHECK_THROWS_AS(growth_series(o), std::invalid_argument);
  o.degrees = {16, 2048};
  CHECK_THROWS_AS(growth_series(o), std::invalid_argument);
}
