#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "support.hpp"
#include "zerostat/errors.hpp"
#include "zerostat/kernel.hpp"
#include "zerostat/rng.hpp"

using namespace zerostat;
using testing::full_spec;

namespace {

using LComplex = std::complex<long double>;

// Term-by-term kernel over the full degree-N simplex, extended precision.
LComplex direct_full(int m, int N, std::span<const Complex> z, std::span<const Complex> w) {
  LComplex acc = 0.0L;
  for (const auto& a : basis_indices(EnsembleSpec::full(m, N))) {
    long double lg = std::lgamma((long double)(N - a.degree() + 1)) + std::lgamma((long double)(m + 1)) -
                     std::lgamma((long double)(N + m + 1));
    LComplex t = 1.0L;
    for (int j = 0; j < m; ++j) {
      lg += std::lgamma((long double)(a[j] + 1));
      t *= std::pow(LComplex(z[j]) * std::conj(LComplex(w[j])), a[j]);
    }
    acc += t * std::exp(-lg);
  }
  return acc;
}

double rel(Complex a, LComplex b) { return std::abs(a - Complex(b)) / std::abs(Complex(b)); }

}  // namespace

TEST_CASE("full kernel: closed form against the term sum") {
  const Complex z0[1] = {Complex(0.7, -0.2)}, w0[1] = {Complex(-1.1, 0.4)};
  CHECK(std::abs(kernel_full(1, 0, z0, w0).value() - 1.0) < 1e-15);

  const Complex z[1] = {Complex(0.3, 0.1)}, w[1] = {Complex(0.0, -0.2)};
  CHECK(rel(kernel_full(1, 20, z, w).value(), direct_full(1, 20, z, w)) < 1e-12);

  const Complex z2[2] = {Complex(0.3, 0.1), Complex(-0.5, 0.2)}, w2[2] = {Complex(0.0, -0.2), Complex(0.4, 0.4)};
  CHECK(rel(kernel_full(2, 15, z2, w2).value(), direct_full(2, 15, z2, w2)) < 1e-12);
  CHECK(rel(kernel(EnsembleSpec::full(2, 15), z2, w2).value(), direct_full(2, 15, z2, w2)) < 1e-12);

  const Complex z3[3] = {0.2, Complex(0, 0.3), 0.1}, w3[3] = {0.5, 0.5, Complex(0.1, -0.3)};
  CHECK(rel(kernel_full(3, 8, z3, w3).value(), direct_full(3, 8, z3, w3)) < 1e-12);
}

TEST_CASE("kernel hermiticity and diagonal positivity") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  int bad_herm = 0, bad_pos = 0;
  for (int t = 0; t < 1'000'000; ++t) {
    const int m = 1 + t % 3;
    const int N = 1 + t % 37;
    Complex z[3], w[3];
    for (int j = 0; j < m; ++j) {
      z[j] = {g(rng), g(rng)};
      w[j] = {g(rng), g(rng)};
    }
    const std::span<const Complex> zs(z, m), ws(w, m);
    const Complex a = kernel_full(m, N, zs, ws).value(), b = kernel_full(m, N, ws, zs).value();
    if (!(std::abs(a - std::conj(b)) <= 1e-12 * std::abs(a))) ++bad_herm;
    const auto d = kernel_full(m, N, zs, zs);
    if (!(d.mantissa.real() > 0.0 && std::abs(d.mantissa.imag()) <= 1e-12 * d.mantissa.real())) ++bad_pos;
  }
  CHECK(bad_herm == 0);
  CHECK(bad_pos == 0);
  // swapped arguments give the exact conjugate
  const Complex z[1] = {Complex(0.3, 0.7)}, w[1] = {Complex(-2.0, 0.1)};
  CHECK(kernel_full(1, 17, z, w).value() == std::conj(kernel_full(1, 17, w, z).value()));
}

TEST_CASE("conditional kernel") {
  const Complex z[1] = {Complex(0.4, -0.3)}, w[1] = {Complex(1.2, 0.5)};
  const auto simplex = LatticePolytope::simplex(1, 1);
  CHECK(rel(kernel_conditional(simplex, 9, 9, z, w).value(), direct_full(1, 9, z, w)) < 1e-12);

  const Complex z2[2] = {Complex(0.4, -0.3), 0.2}, w2[2] = {Complex(1.2, 0.5), Complex(0, 1)};
  CHECK(rel(kernel_conditional(LatticePolytope::simplex(2, 1), 6, 6, z2, w2).value(), direct_full(2, 6, z2, w2)) <
        1e-12);

  // a single lattice point
  const auto pt = LatticePolytope::interval(2, 2);
  const double diag = kernel_conditional(pt, 1, 5, z, z).value().real();
  const double expected = std::pow(std::abs(z[0]), 4) / std::pow(monomial_norm(1, 5, MonomialIndex{2}), 2);
  CHECK(diag == doctest::Approx(expected).epsilon(1e-13));

  // [1,3] dilated by 5 inside degree 20: exponents 5..15 at z = 1
  const Complex one[1] = {1.0};
  long double acc = 0.0L;
  for (int k = 5; k <= 15; ++k) acc += std::exp(-testing::log_norm_sq_cp1(20, k));
  CHECK(kernel_conditional(LatticePolytope::interval(1, 3), 5, 20, one, one).value().real() ==
        doctest::Approx(double(acc)).epsilon(1e-12));

  CHECK_THROWS_AS(kernel_conditional(LatticePolytope::interval(5, 6), 2, 8, z, w), EmptyBasisError);
}

TEST_CASE("conditional diagonal grows with the polytope") {
  for (double r : {0.05, 0.4, 1.0, 3.0}) {
    const Complex z[1] = {std::polar(r, 1.1)};
    const double a = kernel_conditional(LatticePolytope::interval(2, 3), 10, 40, z, z).value().real();
    const double b = kernel_conditional(LatticePolytope::interval(1, 3), 10, 40, z, z).value().real();
    const double c = kernel_conditional(LatticePolytope::interval(0, 4), 10, 40, z, z).value().real();
    CHECK(a <= b);
    CHECK(b <= c);
  }
}

TEST_CASE("Heisenberg kernel") {
  const Complex u[2] = {Complex(0.3, 1.0), Complex(-2.0, 0.1)};
  CHECK(std::abs(heisenberg_kernel(u, u)) == doctest::Approx(1.0).epsilon(1e-14));
  const Complex zero[1] = {0.0}, v[1] = {std::polar(1.0, 0.3)};
  CHECK(std::abs(heisenberg_kernel(zero, v) - std::exp(-0.5)) < 1e-15);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int t = 0; t < 10000; ++t) {
    const Complex a[2] = {{g(rng), g(rng)}, {g(rng), g(rng)}}, b[2] = {{g(rng), g(rng)}, {g(rng), g(rng)}};
    CHECK(std::abs(heisenberg_kernel(a, b)) <= 1.0 + 1e-15);
  }
}

TEST_CASE("scaled kernel matches its definition and tends to the Heisenberg kernel") {
  // definition: (m!/N^m) Pi_N(u/sqrt N, v/sqrt N) in the unitary frame, by the term sum
  const Complex u[1] = {0.5}, v[1] = {Complex(0.0, 0.3)};
  for (int N : {25, 100, 400}) {
    const double s = 1.0 / std::sqrt(double(N));
    const Complex us[1] = {u[0] * s}, vs[1] = {v[0] * s};
    const LComplex sum = direct_full(1, N, us, vs);
    const long double frame = std::pow(1.0L + std::norm(us[0]), -0.5L * N) * std::pow(1.0L + std::norm(vs[0]), -0.5L * N);
    const Complex expected(sum * frame / (long double)N);
    CHECK(std::abs(scaled_kernel(1, N, u, v) - expected) < 1e-12);
  }
  // at the origin the error decreases monotonically
  const Complex zero[1] = {0.0};
  const double e50 = scaled_kernel_error(1, 50, zero, zero), e100 = scaled_kernel_error(1, 100, zero, zero),
               e200 = scaled_kernel_error(1, 200, zero, zero);
  CHECK(e50 > e100);
  CHECK(e100 > e200);
  CHECK(e200 > 0.0);
  // symmetric under swapping the arguments
  CHECK(scaled_kernel_error(1, 80, u, v) == doctest::Approx(scaled_kernel_error(1, 80, v, u)).epsilon(1e-13));
  const Complex u2[2] = {0.5, Complex(0, 0.2)}, v2[2] = {0.1, 0.7};
  CHECK(scaled_kernel_error(2, 80, u2, v2) == doctest::Approx(scaled_kernel_error(2, 80, v2, u2)).epsilon(1e-13));
}

TEST_CASE("the remainder of the scaled kernel is first order in 1/N") {
  // error * N settles to a constant: successive doublings halve the error
  const Complex u[1] = {0.5}, v[1] = {Complex(0.0, 0.3)};
  for (int N : {100, 200, 400, 800}) {
    const double ratio = scaled_kernel_error(1, N, u, v) / scaled_kernel_error(1, 2 * N, u, v);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_CASE("expected density") {
  const auto spec = EnsembleSpec::full(1, 30);
  const Complex z[1] = {0.7};
  const double fs = 1.0 / (std::numbers::pi * std::pow(1.49, 2));
  CHECK(expected_density(spec, z) == doctest::Approx(30 * fs).epsilon(1e-4));
  CHECK(fubini_study_density(z) == doctest::Approx(fs).epsilon(1e-15));

  // the constrained formula through the direct kernel sum gives the same answer for the full basis
  const auto same = EnsembleSpec::constrained(1, 30, LatticePolytope::interval(0, 30));
  CHECK(expected_density(same, z) == doctest::Approx(30 * fs).epsilon(1e-4));

  // total mass N over the chart, by Gauss-Legendre in mu = r^2/(1+r^2)
  std::vector<double> x, w;
  testing::gauss_legendre(64, x, w);
  double mass = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::sqrt(x[i] / (1.0 - x[i]));
    const Complex p[1] = {r};
    mass += w[i] * expected_density(spec, p) * std::numbers::pi / std::pow(1.0 - x[i], 2);
  }
  CHECK(mass == doctest::Approx(30.0).epsilon(1e-3));

  // against the radial formula (1/pi) d/dt (t Pi'/Pi), t = |z|^2, by exact sums
  const auto poly = EnsembleSpec::constrained(1, 200, dilate(LatticePolytope::interval(1, 3), 50));
  for (double r : {0.1, 0.4, 1.0, 2.5}) {
    const long double t = (long double)r * r;
    long double s0 = 0, s1 = 0, s2 = 0, lead = 0;
    for (int k = 50; k <= 150; ++k) lead = std::max(lead, (long double)k * std::log(t) - testing::log_norm_sq_cp1(200, k));
    for (int k = 50; k <= 150; ++k) {
      const long double c = std::exp((long double)k * std::log(t) - testing::log_norm_sq_cp1(200, k) - lead);
      s0 += c;
      s1 += k * c;
      s2 += (long double)k * k * c;
    }
    // t Pi'/Pi = <k>, its t-derivative is Var(k)/t
    const long double var = s2 / s0 - (s1 / s0) * (s1 / s0);
    const double oracle = double(var / t / std::numbers::pi_v<long double>);
    const Complex p[1] = {r};
    CHECK(expected_density(poly, p) == doctest::Approx(oracle).epsilon(1e-5));
  }
  // deep in the forbidden region the density is a small fraction of the Fubini-Study value
  const Complex deep[1] = {0.1};
  CHECK(expected_density(poly, deep) / 200.0 < 0.05 * fubini_study_density(deep));
  const Complex mid[1] = {1.0};
  CHECK(expected_density(poly, mid) / 200.0 == doctest::Approx(fubini_study_density(mid)).epsilon(1e-3));

  const Complex origin[1] = {0.0};
  CHECK_THROWS_AS(expected_density(poly, origin), KernelUnderflowError);
  CHECK_THROWS_AS(expected_density(spec, z, 0.1), std::invalid_argument);
}

TEST_CASE("reproducing property on CP^1") {
  for (int N : {5, 17, 30}) {
    const auto spec = full_spec(1, N);
    Rng rng = trial_stream(31, N);
    const auto s = sample_section(spec, rng);
    const Complex w[1] = {Complex(0.6, -0.8) * 0.9};
    std::vector<double> x, wt;
    testing::gauss_legendre(200, x, wt);
    const int nt = 200;
    Complex acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = std::sqrt(x[i] / (1.0 - x[i]));
      const double frame = std::pow(1.0 - x[i], N);  // (1+|z|^2)^-N
      Complex ring = 0.0;
      for (int j = 0; j < nt; ++j) {
        const Complex z[1] = {std::polar(r, 2.0 * std::numbers::pi * j / nt)};
        ring += evaluate_section(s, z) * kernel_full(1, N, w, z).value();
      }
      acc += wt[i] * frame * ring / double(nt);
    }
    const Complex target = evaluate_section(s, w);
    CHECK(std::abs(acc - target) <= 1e-6 * std::abs(target));
  }
}

TEST_CASE("jet covariance") {
  // single point, m = 1, N = 1: s = sqrt2 (l0 + l1 z), s' = sqrt2 l1
  const ChartPoint p{Complex(0.3, -0.4)};
  const std::vector<ChartPoint> pts{p};
  const auto jc = jet_covariance(EnsembleSpec::full(1, 1), pts);
  Eigen::Matrix2cd brute;
  const Complex z = p[0];
  brute << 2.0 * (1.0 + std::norm(z)), 2.0 * z, 2.0 * std::conj(z), 2.0;
  CHECK((jc.matrix - brute).norm() < 1e-14);

  // value block reproduces the kernel
  const std::vector<ChartPoint> two{{Complex(0.2, 0.1), Complex(-0.3, 0.0)}, {Complex(1.0, 0.5), Complex(0.1, 0.2)}};
  const auto spec2 = EnsembleSpec::full(2, 6);
  const auto c2 = jet_covariance(spec2, two);
  const Complex k = kernel_full(2, 6, two[0], two[1]).value();
  CHECK(std::abs(c2.matrix(c2.value_index(0), c2.value_index(1)) - k) <= 1e-12 * std::abs(k));
  CHECK((c2.matrix - c2.matrix.adjoint()).norm() <= 1e-12 * c2.matrix.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c2.matrix);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  CHECK_FALSE(c2.near_singular);

  // far-separated points decorrelate; the comparison is in the unitary frame
  const std::vector<ChartPoint> far{{Complex(0.0)}, {Complex(1.0)}};
  const auto cf = jet_covariance(EnsembleSpec::full(1, 100), far);
  Eigen::MatrixXcd nrm = cf.matrix;
  for (Eigen::Index a = 0; a < nrm.rows(); ++a)
    for (Eigen::Index b = 0; b < nrm.cols(); ++b)
      nrm(a, b) /= std::sqrt(std::abs(cf.matrix(a, a)) * std::abs(cf.matrix(b, b)));
  CHECK(nrm.block(0, 2, 2, 2).norm() < 1e-6);

  const std::vector<ChartPoint> same{{Complex(0.5)}, {Complex(0.5)}};
  CHECK(jet_covariance(EnsembleSpec::full(1, 5), same).near_singular);
}

TEST_CASE("Heisenberg jet covariance entries") {
  const std::vector<ChartPoint> pts{{Complex(0.0), Complex(0.0)}, {Complex(0.5, 0.2), Complex(-0.1, 0.3)}};
  const auto c = heisenberg_jet_covariance(2, pts);
  const auto& a = pts[0];
  const auto& b = pts[1];
  const Complex e = std::exp(b[0] * std::conj(a[0]) + b[1] * std::conj(a[1]));
  // E[d_i s(b) conj s(a)] = conj(a_i) e^{b.conj a}
  CHECK(std::abs(c.matrix(c.gradient_index(1, 0), c.value_index(0)) - std::conj(a[0]) * e) < 1e-14);
  // E[d_i s(b) conj d_j s(b)] = (delta_ij + conj(b_i) b_j) e^{|b|^2}
  const Complex ebb = std::exp(std::norm(b[0]) + std::norm(b[1]));
  CHECK(std::abs(c.matrix(c.gradient_index(1, 0), c.gradient_index(1, 1)) - std::conj(b[0]) * b[1] * ebb) < 1e-13);
  CHECK(std::abs(c.matrix(c.gradient_index(1, 1), c.gradient_index(1, 1)) - (1.0 + std::norm(b[1])) * ebb) < 1e-13);
}
