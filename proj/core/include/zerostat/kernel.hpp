#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zerostat/ensembles.hpp"
#include "zerostat/polytopes.hpp"

namespace zerostat {

/// Kernel value kept as mantissa * exp(log_scale) so that large degrees do not
/// overflow. Kernels are taken against Haar probability measure, i.e.
/// Pi_N(z, w) = sum_alpha z^alpha conj(w)^alpha / ||z^alpha||_FS^2.
struct KernelValue {
  Complex mantissa;
  double log_scale = 0.0;
  int N = 0;
  int m = 1;

  Complex value() const;
  /// log |value|; -inf when the kernel vanishes.
  double log_abs() const;
};

/// Closed form binom(N+m, m) (1 + <z, w>)^N.
KernelValue kernel_full(int m, int N, std::span<const Complex> z, std::span<const Complex> w);

/// Direct compensated sum over the basis of `spec`.
KernelValue kernel(const EnsembleSpec& spec, std::span<const Complex> z, std::span<const Complex> w);

/// Kernel of the ensemble restricted to the lattice points of dilate(P, N),
/// with Fubini-Study norms of degree `degree`. Throws EmptyBasisError when the
/// dilated polytope has no lattice point in the degree simplex.
KernelValue kernel_conditional(const LatticePolytope& P, int N, int degree,
                               std::span<const Complex> z, std::span<const Complex> w);

/// exp(u . conj(v) - (|u|^2 + |v|^2) / 2).
Complex heisenberg_kernel(std::span<const Complex> u, std::span<const Complex> v);

/// pi^m N^-m Pi_N(u/sqrt N, v/sqrt N) at base point 0, normalized against the
/// Fubini-Study volume (total mass pi^m / m!) and in the unitary frame
/// (1 + |z|^2)^{-N/2}; the value tends to heisenberg_kernel(u, v).
Complex scaled_kernel(int m, int N, std::span<const Complex> u, std::span<const Complex> v);

/// |scaled_kernel - heisenberg_kernel|.
double scaled_kernel_error(int m, int N, std::span<const Complex> u, std::span<const Complex> v);

/// Density of the expected zero current E(Z_s) against Lebesgue measure on the
/// chart: (1/4pi) sum_j Laplacian_j log(Pi(z,z) (1+|z|^2)^-N) plus N times the
/// Fubini-Study density, by Richardson-extrapolated 5-point stencils with steps
/// h and h/2. For m = 2 this is the trace of the (1,1)-form.
double expected_density(const EnsembleSpec& spec, std::span<const Complex> z, double h = 1e-3);

/// Fubini-Study density trace (1/4pi) sum_j Laplacian_j log(1+|z|^2); for m = 1
/// this is (1/pi)(1+|z|^2)^-2, total mass 1 on CP^1.
double fubini_study_density(std::span<const Complex> z);

/// Covariance of (s(z^1), grad s(z^1), ..., s(z^n), grad s(z^n)), ordered point
/// by point with the value first; entry (a, b) is E[X_a conj(X_b)].
struct JetCovariance {
  std::vector<ChartPoint> points;
  int m = 1;
  Eigen::MatrixXcd matrix;
  bool near_singular = false;

  Eigen::Index value_index(std::size_t point) const {
    return static_cast<Eigen::Index>(point) * (m + 1);
  }
  Eigen::Index gradient_index(std::size_t point, int j) const {
    return value_index(point) + 1 + j;
  }
};

JetCovariance jet_covariance(const EnsembleSpec& spec, std::span<const ChartPoint> points);

/// Same blocks for the Gaussian field on C^m with covariance exp(u . conj(v)),
/// the scaling limit of every ensemble.
JetCovariance heisenberg_jet_covariance(int m, std::span<const ChartPoint> points);

}  // namespace zerostat
