#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "zerostat/ensembles.hpp"
#include "zerostat/zeros.hpp"

namespace zerostat {

/// Binned estimate of the rescaled pair correlation kappa(r).
struct PairCorrelationCurve {
  std::vector<double> bin_edges;
  std::vector<double> kappa_hat;
  std::vector<double> std_errors;
  std::vector<std::uint64_t> pair_count;
  std::vector<bool> low_confidence;
  /// Mean number of points per configuration, the self-normalized intensity.
  double intensity = 0.0;
  double scale = 1.0;
  std::size_t trials = 0;
  std::size_t references = 0;
  std::string normalization;

  std::size_t bins() const { return kappa_hat.size(); }
  double r_mid(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
  /// sqrt of the area-weighted mean of r^2 over bin b.
  double r_eff(std::size_t b) const;
};

inline constexpr std::uint64_t kLowConfidencePairs = 100;

struct PairCorrelationOptions {
  double rmax = 5.0;
  std::size_t bins = 100;
  /// Rescaling factor, sqrt(N) for degree-N zeros.
  double scale = 1.0;
  Complex z0 = 0.0;
  /// Reference points are those within this rescaled distance of z0.
  double reference_cutoff = std::numeric_limits<double>::infinity();
};

/// Per-configuration tallies; merged in trial order.
struct PairTally {
  std::vector<std::uint64_t> counts;
  std::uint64_t references = 0;
  std::uint64_t points = 0;
};

/// Ripley-style estimator for point configurations on CP^1 given in the chart.
/// Each reference point is moved to the origin by the SU(2) motion
/// w -> (w - z) / (1 + conj(z) w); partners are taken from the whole sphere, so
/// there is no boundary and no edge bias. Expected counts are those of a
/// Poisson process of the measured intensity with respect to the Fubini-Study
/// probability measure.
class PairCorrelationEstimator {
 public:
  explicit PairCorrelationEstimator(PairCorrelationOptions opts);

  PairTally tally(std::span<const Complex> points) const;
  PairCorrelationCurve finish(std::span<const PairTally> tallies) const;

  const PairCorrelationOptions& options() const { return opts_; }

 private:
  PairCorrelationOptions opts_;
  std::vector<double> edges_;
  std::vector<double> mass_;  // Fubini-Study mass of each rescaled annulus
};

struct TrialRunOptions {
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;
  int workers = 1;
  RootOptions solver{};
};

struct FailureAccount {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double rate() const { return trials ? double(failures) / double(trials) : 0.0; }
};

/// Sampling path (m = 1). Trials whose solver fails are dropped from the
/// estimate and counted in `failures`; more than 1% failures throws SolverFailure.
PairCorrelationCurve pair_correlation_empirical(const SpecPtr& spec, PairCorrelationOptions opts,
                                                const TrialRunOptions& run,
                                                FailureAccount* failures = nullptr);

/// Poisson configurations on CP^1: Poisson(mean_points) points, uniform for
/// the Fubini-Study measure, in chart coordinates.
std::vector<Complex> poisson_configuration(double mean_points, Rng& rng);

PairCorrelationCurve pair_correlation_poisson(double mean_points, PairCorrelationOptions opts,
                                              std::size_t trials, std::uint64_t master_seed,
                                              int workers = 1);

struct KappaEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Universal two-point function kappa_mm(r) of the Heisenberg field from the
/// Kac-Rice formula: condition the jets at two points distance r apart on
/// vanishing values and evaluate E|det xi^1|^2 |det xi^2|^2. Closed form for
/// m = 1, conditional Gaussian Monte Carlo with `mc_samples` draws otherwise.
/// Throws ConditioningError for r < 1e-3.
KappaEstimate kappa_kacrice(int m, double r, std::size_t mc_samples = 1'000'000,
                            std::uint64_t seed = 0);

/// Small-r law ((m+1)/4) r^{4-2m}.
double kappa_asymptote(int m, double r);

struct CurveComparison {
  double max_relative_deviation = 0.0;
  std::vector<std::size_t> bins;
  std::vector<double> reference;
  std::vector<double> relative_deviation;
  std::vector<double> z_scores;
  std::vector<bool> flagged;
  std::size_t flagged_count() const;
};

using AnalyticCurve = std::function<KappaEstimate(double)>;

/// Compares bins of `a` lying inside [rlo, rhi] with the area-weighted bin
/// average of `b`. Bins whose deviation exceeds 3 combined standard errors are
/// flagged. Throws std::invalid_argument when no bin overlaps the band.
CurveComparison compare_curves(const PairCorrelationCurve& a, const AnalyticCurve& b, double rlo,
                               double rhi);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double log_prefactor = 0.0;
  std::size_t bins_used = 0;
};

/// Weighted least squares of log kappa_hat against log r_eff over [rlo, rhi].
PowerLawFit fit_power_law(const PairCorrelationCurve& c, double rlo, double rhi);

/// Pair-weighted mean of kappa_hat over the bins inside [rlo, rhi].
KappaEstimate band_average(const PairCorrelationCurve& c, double rlo, double rhi);

/// Rectangular chart grid (cartesian cells) or annular bands |z| in [edge_k, edge_{k+1}).
struct DensityGrid {
  enum class Kind { Cartesian, Radial };
  Kind kind = Kind::Cartesian;
  double x0 = -2, x1 = 2, y0 = -2, y1 = 2;
  std::size_t nx = 40, ny = 40;
  std::vector<double> radial_edges;

  static DensityGrid cartesian(double x0, double x1, std::size_t nx, double y0, double y1,
                               std::size_t ny);
  static DensityGrid radial(std::vector<double> edges);

  std::size_t cells() const;
  /// Cell containing z, or cells() when outside the window.
  std::size_t locate(Complex z) const;
  double area(std::size_t cell) const;
  /// Representative point (centre; for bands, a point on the mid radius).
  Complex centre(std::size_t cell) const;
};

struct DensityMap {
  DensityGrid grid;
  /// Total zero count per cell over all successful trials.
  std::vector<double> counts;
  std::size_t trials = 0;
  /// Counts are divided by this degree when normalizing.
  double normalization = 1.0;
  /// Cells are restricted to this domain (torus excludes zeros with a zero coordinate).
  bool torus_only = false;

  /// Mean zeros per unit chart area per trial, divided by `normalization`.
  double density(std::size_t cell) const;
};

/// Monte Carlo zero density (m = 1) normalized by the degree N. Deterministic
/// given the master seed; more than 1% solver failures throws SolverFailure.
DensityMap empirical_density(const SpecPtr& spec, const DensityGrid& grid,
                             const TrialRunOptions& run, bool torus_only = false,
                             FailureAccount* failures = nullptr);

/// Mean minimal chordal gap between zeros (exploratory; no claimed law).
KappaEstimate mean_minimal_gap(const SpecPtr& spec, const TrialRunOptions& run,
                               FailureAccount* failures = nullptr);

}  // namespace zerostat
