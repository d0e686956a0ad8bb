#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zerostat/monomial.hpp"
#include "zerostat/polytopes.hpp"
#include "zerostat/rng.hpp"

namespace zerostat {

using Complex = std::complex<double>;
/// A point of the affine chart C^m of CP^m, m <= 3.
using ChartPoint = std::vector<Complex>;

/// log ||z^alpha||_FS^2 for the degree-N homogenization Z_0^{N-|alpha|} Z^alpha,
/// against Haar probability measure on S^{2m+1}.
double log_monomial_norm_sq(int m, int N, const MonomialIndex& alpha);

/// ||z^alpha||_FS. Throws InvalidIndexError when |alpha| > N.
double monomial_norm(int m, int N, const MonomialIndex& alpha);

/// Gaussian ensemble on the span of the monomials z^alpha / ||z^alpha||_FS,
/// |alpha| <= N, optionally restricted to the lattice points of a polytope.
class EnsembleSpec {
 public:
  static EnsembleSpec full(int m, int N);
  /// `constraint` is given in exponent space (already dilated). Throws
  /// EmptyBasisError when no lattice point of it lies in the degree-N simplex.
  static EnsembleSpec constrained(int m, int N, LatticePolytope constraint);

  int dim() const { return m_; }
  int degree() const { return N_; }
  const std::optional<LatticePolytope>& constraint() const { return constraint_; }
  bool is_full() const { return !constraint_.has_value(); }

  std::size_t size() const { return basis_.size(); }
  const std::vector<MonomialIndex>& basis() const { return basis_; }
  /// ||z^alpha||_FS, aligned with basis().
  const std::vector<double>& norms() const { return norms_; }
  const std::vector<double>& log_norms_sq() const { return log_norms_sq_; }

  std::optional<std::size_t> find(const MonomialIndex& alpha) const;

 private:
  EnsembleSpec(int m, int N, std::optional<LatticePolytope> constraint);

  int m_ = 1;
  int N_ = 0;
  std::optional<LatticePolytope> constraint_;
  std::vector<MonomialIndex> basis_;
  std::vector<double> norms_;
  std::vector<double> log_norms_sq_;
};

using SpecPtr = std::shared_ptr<const EnsembleSpec>;

std::vector<MonomialIndex> basis_indices(const EnsembleSpec& spec);

/// One draw s = sum_alpha lambda_alpha z^alpha / ||z^alpha||_FS.
struct SectionSample {
  SpecPtr spec;
  /// lambda_alpha, aligned with spec->basis().
  std::vector<Complex> coeffs;

  /// Chart coefficient of z^alpha: lambda_alpha / ||z^alpha||_FS.
  Complex chart_coefficient(std::size_t i) const { return coeffs[i] / spec->norms()[i]; }
  /// m = 1 only: dense chart coefficients a_0 ... a_N (zeros outside the basis).
  std::vector<Complex> univariate_coefficients() const;
};

SectionSample sample_section(const SpecPtr& spec, Rng& rng);

SectionSample operator+(const SectionSample& a, const SectionSample& b);

/// s(z) = mantissa * exp(log_scale).
struct ScaledValue {
  Complex mantissa;
  double log_scale = 0.0;
  Complex value() const;
};

/// s(z) in the affine chart. Points with |z| > 1 are evaluated through the
/// homogeneous representative on the unit sphere and rescaled, so the result
/// overflows only when s(z) itself is not representable.
Complex evaluate_section(const SectionSample& s, std::span<const Complex> z);

/// Overflow-free form of evaluate_section.
ScaledValue evaluate_scaled(const SectionSample& s, std::span<const Complex> z);

/// Pointwise hermitian magnitude |s(z)| / (1 + |z|^2)^{N/2}.
double hermitian_magnitude(const SectionSample& s, std::span<const Complex> z);

/// Chart partial derivatives d s / d z_j, j = 1..m.
std::vector<Complex> evaluate_gradient(const SectionSample& s, std::span<const Complex> z);

/// JSON: {"m", "N", "constraint"?, "coeffs": [[[alpha...], re, im], ...]}.
std::string to_json(const SectionSample& s);
/// Norms are recomputed from (m, N, constraint). Throws InvalidIndexError if
/// the coefficient keys do not equal the basis.
SectionSample section_from_json(const std::string& text);

}  // namespace zerostat
