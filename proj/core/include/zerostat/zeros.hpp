#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zerostat/ensembles.hpp"

namespace zerostat {

/// A zero in the chart; only the first m coordinates are meaningful.
using ZeroPoint = std::array<Complex, 2>;

struct ChartZero {
  ZeroPoint point{};
  /// Relative residual |f(z)| / sum_alpha |a_alpha| |z^alpha| (max over the
  /// equations of a system).
  double residual = 0.0;
  int multiplicity = 1;
};

struct ZeroSet {
  int m = 1;
  std::vector<ChartZero> chart_zeros;
  int at_infinity = 0;
  int target_count = 0;

  /// Chart zeros counted with multiplicity.
  int chart_count() const;
};

struct RootOptions {
  double certify_threshold = 1e-8;
  /// Zeros closer than this (relative to max(1, |z|)) are merged.
  double merge_distance = 1e-9;
  int max_iterations = 500;
};

/// All zeros on CP^1 of a degree-N section given by chart coefficients
/// a_0 ... a_N. Vanishing top coefficients are zeros at infinity; vanishing
/// low coefficients give a zero at the origin. Throws SolverFailure when not
/// every root can be certified, and std::invalid_argument for the zero section.
ZeroSet roots_cp1(std::span<const Complex> coeffs, const RootOptions& opts = {});
ZeroSet roots_cp1(const SectionSample& sample, const RootOptions& opts = {});

/// Aberth-Ehrlich iteration on a polynomial with nonzero constant and leading
/// coefficients. Starts from `initial` when given, else from Newton-polygon
/// circles. `converged` (optional) receives per-root convergence flags.
std::vector<Complex> aberth_roots(std::span<const Complex> coeffs,
                                  std::span<const Complex> initial = {},
                                  int max_iterations = 500,
                                  std::vector<bool>* converged = nullptr);

/// Eigenvalues of the balanced companion matrix.
std::vector<Complex> companion_roots(std::span<const Complex> coeffs);

/// Relative residual of a univariate polynomial at z, overflow-safe.
double relative_residual(std::span<const Complex> coeffs, Complex z);

struct SystemOptions {
  /// Cap on the total degree of each equation.
  int max_degree = 12;
  double certify_threshold = 1e-8;
  /// Condition estimate above which the Sylvester determinant is recomputed
  /// in extended precision.
  double extended_precision_condition = 1e10;
};

/// Common zeros of two sections on CP^2 (m = 2). Elimination of z_2 through the
/// Sylvester resultant, roots of the resultant in z_1, back substitution and
/// joint Newton refinement. Finite zeros appear in chart_zeros (including
/// those with a vanishing coordinate); at_infinity completes the Bezout count.
/// Throws DegeneracyError for non-generic pairs, SolverFailure when a zero
/// cannot be certified and std::invalid_argument when the degree cap is exceeded.
ZeroSet solve_system_2d(const SectionSample& f, const SectionSample& g,
                        const SystemOptions& opts = {});

using ZeroPredicate = std::function<bool(const ZeroPoint&)>;

/// Number of chart zeros satisfying `region`, counted with multiplicity.
int count_in(const ZeroSet& zeros, const ZeroPredicate& region);

/// Domain helpers: region predicates state where they count.
ZeroPredicate whole_chart();
/// The algebraic torus C^{*m}: all m coordinates nonzero.
ZeroPredicate in_torus(int m, double tol = 0.0);
/// C^* intersected with an annulus lo <= |z| < hi (m = 1).
ZeroPredicate annulus(double lo, double hi);

/// CSV: re,im,residual,multiplicity (m = 1) or re1,im1,re2,im2,residual,multiplicity.
std::string to_csv(const ZeroSet& zeros);

}  // namespace zerostat
