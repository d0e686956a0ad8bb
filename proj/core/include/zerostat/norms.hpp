#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "zerostat/ensembles.hpp"

namespace zerostat {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Polar product quadrature on CP^1 in the coordinates mu = |z|^2/(1+|z|^2)
/// and theta = arg z, where the Fubini-Study probability measure is
/// d mu d theta / 2 pi. Zero node counts select sizes from N and p: for even
/// integer p the automatic grid integrates |s|_h^p exactly.
struct Quadrature {
  int mu_nodes = 0;
  int theta_nodes = 0;
  /// Recompute on the doubled grid and throw ResolutionError when the value
  /// moves by more than `tolerance` (relative).
  bool check_resolution = true;
  double tolerance = 1e-3;
};

/// ||s||_p / ||s||_2 on CP^1 (m = 1) for the hermitian magnitude
/// |s|_h = |s(z)| (1+|z|^2)^{-N/2}. p = kInfinity gives the sup norm: a
/// Fubini-Study uniform grid of side max(512, 8 sqrt N) followed by ascent
/// from the 10 best cells.
double lp_norm(const SectionSample& s, double p, const Quadrature& quad = {});

/// ||s||_2 by quadrature, without normalization.
double l2_norm(const SectionSample& s, const Quadrature& quad = {});

/// Same ratio restricted to a spherical cap {mu(phi(z)) < cap_mu} around
/// `centre`, phi the SU(2) motion taking centre to 0. The cap measure is
/// renormalized to mass 1.
double cap_lp_norm(const SectionSample& s, double p, Complex centre, double cap_mu,
                   int mu_nodes = 64, int theta_nodes = 256);

struct NormSeries {
  std::vector<int> degrees;
  double p = 2.0;
  std::vector<double> means;
  std::vector<double> stderrs;
  std::size_t trials = 0;
};

struct GrowthOptions {
  std::vector<int> degrees;
  std::size_t trials = 100;
  double p = kInfinity;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

/// Mean normalized L^p norm of the full m = 1 ensemble per degree; degrees in
/// [16, 1024]. Deterministic given the master seed. The grid resolution is
/// checked on the first trial of each degree.
NormSeries growth_series(const GrowthOptions& opts);

}  // namespace zerostat
