#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"
#include "zerostat/errors.hpp"
#include "zerostat/rng.hpp"

using namespace zerostat;
using testing::full_spec;

namespace {

// Monte Carlo over the unit sphere of C^{m+1}: E |Z_0^{N-|a|} Z^a|^2.
double sphere_moment(int m, int N, const MonomialIndex& a, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double acc = 0.0;
  std::vector<Complex> Z(m + 1);
  for (std::size_t s = 0; s < samples; ++s) {
    double r2 = 0.0;
    for (auto& c : Z) {
      c = {g(rng), g(rng)};
      r2 += std::norm(c);
    }
    double v = std::pow(std::norm(Z[0]) / r2, N - a.degree());
    for (int j = 0; j < m; ++j) v *= std::pow(std::norm(Z[j + 1]) / r2, a[j]);
    acc += v;
  }
  return acc / double(samples);
}

}  // namespace

TEST_CASE("monomial norms: closed values") {
  CHECK(monomial_norm(1, 1, MonomialIndex{0}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(monomial_norm(2, 1, MonomialIndex{0, 0}) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(monomial_norm(1, 2, MonomialIndex{3}), InvalidIndexError);
}

TEST_CASE("monomial norms agree with sphere integration") {
  const double mc = sphere_moment(1, 2, MonomialIndex{1}, 10'000'000, 17);
  const double v = monomial_norm(1, 2, MonomialIndex{1});
  CHECK(std::abs(v * v / mc - 1.0) < 1e-3);
  // a few more shapes at lower sample counts
  for (auto [m, N, a] : {std::tuple{2, 3, MonomialIndex{1, 1}}, std::tuple{3, 2, MonomialIndex{0, 1, 1}},
                         std::tuple{1, 5, MonomialIndex{2}}}) {
    const double w = monomial_norm(m, N, a);
    CHECK(std::abs(w * w / sphere_moment(m, N, a, 2'000'000, 23) - 1.0) < 1e-2);
  }
}

TEST_CASE("monomial norms are symmetric in the exponents") {
  CHECK(monomial_norm(2, 7, MonomialIndex{2, 4}) == doctest::Approx(monomial_norm(2, 7, MonomialIndex{4, 2})));
  CHECK(monomial_norm(3, 9, MonomialIndex{1, 2, 5}) == doctest::Approx(monomial_norm(3, 9, MonomialIndex{5, 1, 2})));
}

TEST_CASE("basis indices") {
  const auto b = basis_indices(EnsembleSpec::full(1, 3));
  REQUIRE(b.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(b[k] == MonomialIndex{k});
  const auto c = basis_indices(EnsembleSpec::constrained(1, 4, LatticePolytope::interval(1, 3)));
  REQUIRE(c.size() == 3);
  CHECK(c[0] == MonomialIndex{1});
  CHECK(c[2] == MonomialIndex{3});
  CHECK(basis_indices(EnsembleSpec::full(2, 2)).size() == 6);
  CHECK_THROWS_AS(EnsembleSpec::constrained(1, 4, LatticePolytope::interval(5, 7)), EmptyBasisError);
}

TEST_CASE("basis cardinality") {
  for (int m = 1; m <= 3; ++m)
    for (int N : {0, 1, 4, 9}) {
      double binom = 1.0;
      for (int k = 1; k <= m; ++k) binom = binom * (N + k) / k;
      CHECK(EnsembleSpec::full(m, N).size() == static_cast<std::size_t>(std::lround(binom)));
    }
  const auto P = LatticePolytope::polygon({{1, 0}, {4, 1}, {2, 3}});
  // P lies inside the degree-5 simplex, so the basis is exactly the lattice points
  CHECK(EnsembleSpec::constrained(2, 5, P).size() == lattice_points(P).size());
  // truncated by the simplex of degree 4
  std::size_t inside = 0;
  for (const auto& a : lattice_points(P))
    if (a.degree() <= 4) ++inside;
  CHECK(EnsembleSpec::constrained(2, 4, P).size() == inside);
}

TEST_CASE("sampling is deterministic and Gaussian") {
  const auto spec = full_spec(1, 3);
  Rng r1 = trial_stream(99, 5), r2 = trial_stream(99, 5);
  CHECK(sample_section(spec, r1).coeffs == sample_section(spec, r2).coeffs);

  constexpr int n = 100'000;
  Rng rng = trial_stream(1234, 0);
  std::vector<std::vector<Complex>> draws(n);
  for (auto& d : draws) d = sample_section(spec, rng).coeffs;
  const int k = static_cast<int>(spec->size());
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      Complex mean = 0.0;
      for (const auto& d : draws) mean += d[a] * std::conj(d[b]);
      mean /= double(n);
      const double se = 1.0 / std::sqrt(double(n));
      const Complex target = a == b ? 1.0 : 0.0;
      // real and imaginary parts of an off-diagonal product each have variance 1/2;
      // 4 sigma keeps the family of 32 comparisons near the 1e-3 level
      const double tol = 4.0 * (a == b ? se : se * std::sqrt(0.5));
      CHECK(std::abs(mean.real() - target.real()) < tol);
      CHECK(std::abs(mean.imag() - target.imag()) < tol);
    }

  // Kolmogorov-Smirnov against N(0, 1/2) at level 1e-3
  std::vector<double> re(n);
  for (int i = 0; i < n; ++i) re[i] = draws[i][0].real();
  std::sort(re.begin(), re.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = 0.5 * std::erfc(-re[i]);  // CDF of N(0, 1/2)
    d = std::max({d, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  CHECK(d * std::sqrt(double(n)) < 1.9495);
}

TEST_CASE("mean squared coefficient norm is the basis dimension") {
  const auto spec = full_spec(1, 10);
  double acc = 0.0, acc2 = 0.0;
  constexpr int n = 10'000;
  for (int t = 0; t < n; ++t) {
    Rng rng = trial_stream(77, t);
    double s = 0.0;
    for (const auto& c : sample_section(spec, rng).coeffs) s += std::norm(c);
    acc += s;
    acc2 += s * s;
  }
  const double mean = acc / n, sd = std::sqrt(acc2 / n - mean * mean);
  CHECK(std::abs(mean - 11.0) < 4.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("evaluation") {
  const auto spec = full_spec(2, 3);
  auto one = testing::from_chart(spec, {});
  one.coeffs[0] = 1.0;
  const Complex z[2] = {Complex(0.3, -1.2), Complex(2.0, 0.5)};
  CHECK(std::abs(evaluate_section(one, z) - 1.0 / spec->norms()[0]) < 1e-14);

  Rng rng = trial_stream(3, 0);
  const auto s = sample_section(spec, rng);
  const Complex origin[2] = {0.0, 0.0};
  CHECK(std::abs(evaluate_section(s, origin) - s.coeffs[0] / spec->norms()[0]) < 1e-14);
}

TEST_CASE("evaluation matches an extended-precision term sum") {
  for (int m = 1; m <= 3; ++m) {
    const auto spec = full_spec(m, 12);
    for (int t = 0; t < 20; ++t) {
      Rng rng = trial_stream(41, m, t);
      const auto s = sample_section(spec, rng);
      std::vector<Complex> z(m);
      for (auto& c : z) c = 0.8 * standard_complex_gaussian(rng);
      std::complex<long double> acc = 0.0L;
      std::complex<long double> grad0 = 0.0L;
      for (std::size_t i = 0; i < spec->size(); ++i) {
        const auto& a = spec->basis()[i];
        // independent norm: exp of the log-factorial expression
        long double lg = std::lgamma((long double)(spec->degree() - a.degree() + 1)) + std::lgamma((long double)(m + 1)) -
                         std::lgamma((long double)(spec->degree() + m + 1));
        for (int j = 0; j < m; ++j) lg += std::lgamma((long double)(a[j] + 1));
        const long double inv_norm = std::exp(-0.5L * lg);
        std::complex<long double> term = std::complex<long double>(s.coeffs[i]) * inv_norm;
        std::complex<long double> d = term * (long double)a[0];
        for (int j = 0; j < m; ++j) {
          const std::complex<long double> zj(z[j]);
          term *= std::pow(zj, a[j]);
          d *= j == 0 ? (a[0] > 0 ? std::pow(zj, a[0] - 1) : std::complex<long double>(0.0L)) : std::pow(zj, a[j]);
        }
        acc += term;
        grad0 += d;
      }
      const Complex v = evaluate_section(s, z);
      CHECK(std::abs(v - Complex(acc)) <= 1e-12 * std::abs(Complex(acc)));
      const auto g = evaluate_gradient(s, z);
      CHECK(std::abs(g[0] - Complex(grad0)) <= 1e-12 * std::max(1.0, std::abs(Complex(grad0))));
    }
  }
}

TEST_CASE("evaluation is linear in the coefficients") {
  const auto spec = full_spec(1, 40);
  Rng rng = trial_stream(8, 0);
  const auto a = sample_section(spec, rng), b = sample_section(spec, rng);
  for (double r : {0.1, 0.9, 1.5, 30.0}) {
    const Complex z[1] = {std::polar(r, 0.4)};
    const Complex lhs = evaluate_section(a + b, z);
    const Complex rhs = evaluate_section(a, z) + evaluate_section(b, z);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("large |z| evaluation stays finite in scaled form") {
  const auto spec = full_spec(1, 400);
  Rng rng = trial_stream(2, 0);
  const auto s = sample_section(spec, rng);
  const Complex z[1] = {1e6};
  const auto v = evaluate_scaled(s, z);
  CHECK(std::isfinite(v.mantissa.real()));
  CHECK(std::isfinite(v.log_scale));
  // the hermitian magnitude near infinity is governed by the top coefficient
  const double top = std::abs(s.coeffs.back()) / spec->norms().back();
  const double log_expected = std::log(top) + 400 * std::log(1e6) - 200 * std::log1p(1e12);
  CHECK(std::log(hermitian_magnitude(s, z)) == doctest::Approx(log_expected).epsilon(1e-4));
}

TEST_CASE("JSON round trip") {
  const auto spec = std::make_shared<const EnsembleSpec>(
      EnsembleSpec::constrained(2, 5, LatticePolytope::polygon({{1, 0}, {4, 1}, {2, 3}})));
  Rng rng = trial_stream(6, 0);
  const auto s = sample_section(spec, rng);
  const auto back = section_from_json(to_json(s));
  CHECK(back.spec->degree() == 5);
  CHECK(back.spec->basis() == spec->basis());
  CHECK(back.coeffs == s.coeffs);
  CHECK(back.spec->norms() == spec->norms());
}
