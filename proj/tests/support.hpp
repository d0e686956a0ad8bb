#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <vector>

#include "zerostat/ensembles.hpp"

namespace testing {

using zerostat::Complex;

inline zerostat::SpecPtr full_spec(int m, int N) {
  return std::make_shared<const zerostat::EnsembleSpec>(zerostat::EnsembleSpec::full(m, N));
}

/// Sample whose chart polynomial has the given coefficients (by basis index).
inline zerostat::SectionSample from_chart(const zerostat::SpecPtr& spec,
                                          const std::map<zerostat::MonomialIndex, Complex, zerostat::GradedLexLess>& c) {
  zerostat::SectionSample s{spec, std::vector<Complex>(spec->size(), Complex(0.0))};
  for (const auto& [alpha, value] : c) {
    const auto i = spec->find(alpha);
    if (!i) throw std::invalid_argument("monomial outside the basis");
    s.coeffs[*i] = value * spec->norms()[*i];
  }
  return s;
}

/// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

/// log of k! (N-k)! / (N+1)!: the squared Fubini-Study norm of z^k in degree N.
inline long double log_norm_sq_cp1(int N, int k) {
  return std::lgamma((long double)k + 1) + std::lgamma((long double)(N - k) + 1) - std::lgamma((long double)N + 2);
}

}  // namespace testing
