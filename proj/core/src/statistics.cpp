#include "zerostat/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "zerostat/errors.hpp"
#include "zerostat/io.hpp"
#include "zerostat/parallel.hpp"
#include "zerostat/rng.hpp"

namespace zerostat {

namespace {

constexpr double kPi = std::numbers::pi;

// Fubini-Study probability mass of the chart disk |w| < a.
double fs_disk_mass(double a) { return a * a / (1.0 + a * a); }

// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

std::vector<Complex> expand_points(const ZeroSet& zs) {
  std::vector<Complex> pts;
  pts.reserve(zs.target_count);
  for (const auto& z : zs.chart_zeros)
    for (int k = 0; k < z.multiplicity; ++k) pts.push_back(z.point[0]);
  return pts;
}

void check_failures(const FailureAccount& acc) {
  if (acc.trials > 0 && double(acc.failures) > 0.01 * double(acc.trials))
    throw SolverFailure(std::to_string(acc.failures) + " of " + std::to_string(acc.trials) +
                        " trials failed certification (budget 1%)");
}

}  // namespace

double PairCorrelationCurve::r_eff(std::size_t b) const {
  const double a = bin_edges[b], c = bin_edges[b + 1];
  return std::sqrt(0.5 * (a * a + c * c));
}

PairCorrelationEstimator::PairCorrelationEstimator(PairCorrelationOptions opts) : opts_(opts) {
  if (!(opts_.rmax > 0.0)) throw std::invalid_argument("rmax must be positive");
  if (opts_.bins == 0) throw std::invalid_argument("bins must be positive");
  if (!(opts_.scale > 0.0)) throw std::invalid_argument("scale must be positive");
  edges_.resize(opts_.bins + 1);
  for (std::size_t b = 0; b <= opts_.bins; ++b) edges_[b] = opts_.rmax * double(b) / double(opts_.bins);
  mass_.resize(opts_.bins);
  for (std::size_t b = 0; b < opts_.bins; ++b)
    mass_[b] = fs_disk_mass(edges_[b + 1] / opts_.scale) - fs_disk_mass(edges_[b] / opts_.scale);
}

PairTally PairCorrelationEstimator::tally(std::span<const Complex> points) const {
  PairTally t;
  t.counts.assign(opts_.bins, 0);
  t.points = points.size();
  const double width = opts_.rmax / double(opts_.bins);
  const bool cut = std::isfinite(opts_.reference_cutoff);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Complex zi = points[i];
    if (cut) {
      const double d = opts_.scale * std::abs((zi - opts_.z0) / (1.0 + std::conj(opts_.z0) * zi));
      if (d > opts_.reference_cutoff) continue;
    }
    ++t.references;
    const Complex czi = std::conj(zi);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      const double r = opts_.scale * std::abs((points[j] - zi) / (1.0 + czi * points[j]));
      if (!(r < opts_.rmax)) continue;
      const auto b = std::min(opts_.bins - 1, static_cast<std::size_t>(r / width));
      ++t.counts[b];
    }
  }
  return t;
}

PairCorrelationCurve PairCorrelationEstimator::finish(std::span<const PairTally> tallies) const {
  PairCorrelationCurve c;
  c.bin_edges = edges_;
  c.scale = opts_.scale;
  c.trials = tallies.size();
  const std::size_t nb = opts_.bins;
  double points = 0.0, refs = 0.0, refs_sq = 0.0;
  std::vector<double> sum_c(nb, 0.0), sum_cc(nb, 0.0), sum_cn(nb, 0.0);
  for (const auto& t : tallies) {
    points += double(t.points);
    const double n = double(t.references);
    refs += n;
    refs_sq += n * n;
    for (std::size_t b = 0; b < nb; ++b) {
      const double cb = double(t.counts[b]);
      sum_c[b] += cb;
      sum_cc[b] += cb * cb;
      sum_cn[b] += cb * n;
    }
  }
  c.references = static_cast<std::size_t>(refs);
  c.intensity = tallies.empty() ? 0.0 : points / double(tallies.size());
  c.normalization = "poisson, fubini-study probability measure, intensity " + format_double(c.intensity) +
                    " points per configuration, rescaling " + format_double(opts_.scale);
  c.kappa_hat.resize(nb);
  c.std_errors.resize(nb);
  c.pair_count.resize(nb);
  c.low_confidence.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const double unit = c.intensity * mass_[b];  // expected partners per reference
    const double expected = unit * refs;
    c.pair_count[b] = static_cast<std::uint64_t>(sum_c[b]);
    c.low_confidence[b] = c.pair_count[b] < kLowConfidencePairs;
    if (expected <= 0.0) {
      c.kappa_hat[b] = 0.0;
      c.std_errors[b] = 0.0;
      c.low_confidence[b] = true;
      continue;
    }
    const double k = sum_c[b] / expected;
    // per-trial residuals c_t - k e_t, with e_t = unit * n_t
    const double ss = sum_cc[b] - 2.0 * k * unit * sum_cn[b] + k * k * unit * unit * refs_sq;
    c.kappa_hat[b] = k;
    c.std_errors[b] = std::sqrt(std::max(0.0, ss)) / expected;
  }
  return c;
}

PairCorrelationCurve pair_correlation_empirical(const SpecPtr& spec, PairCorrelationOptions opts,
                                                const TrialRunOptions& run, FailureAccount* failures) {
  if (spec->dim() != 1) throw std::invalid_argument("pair correlation sampling needs m = 1");
  if (opts.rmax > 5.0) throw std::invalid_argument("rmax must not exceed 5");
  if (run.trials == 0) throw std::invalid_argument("trials must be positive");
  opts.scale = std::sqrt(double(spec->degree()));
  const PairCorrelationEstimator est(opts);
  auto per_trial = parallel_map(run.trials, run.workers, [&](std::size_t t) -> std::optional<PairTally> {
    Rng rng = trial_stream(run.master_seed, t);
    const auto s = sample_section(spec, rng);
    try {
      const auto zs = roots_cp1(s, run.solver);
      const auto pts = expand_points(zs);
      return est.tally(pts);
    } catch (const SolverFailure&) {
      return std::nullopt;
    }
  });
  FailureAccount acc;
  acc.trials = run.trials;
  std::vector<PairTally> ok;
  ok.reserve(per_trial.size());
  for (auto& t : per_trial) {
    if (t) ok.push_back(std::move(*t));
    else ++acc.failures;
  }
  if (failures) *failures = acc;
  check_failures(acc);
  return est.finish(ok);
}

std::vector<Complex> poisson_configuration(double mean_points, Rng& rng) {
  if (!(mean_points >= 0.0)) throw std::invalid_argument("mean must be non-negative");
  std::poisson_distribution<long> count(mean_points);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const long n = mean_points > 0 ? count(rng) : 0;
  std::vector<Complex> pts(n);
  for (long i = 0; i < n; ++i) {
    const double u = unif(rng);
    const double theta = 2.0 * kPi * unif(rng);
    pts[i] = std::polar(std::sqrt(u / (1.0 - u)), theta);
  }
  return pts;
}

PairCorrelationCurve pair_correlation_poisson(double mean_points, PairCorrelationOptions opts, std::size_t trials,
                                              std::uint64_t master_seed, int workers) {
  const PairCorrelationEstimator est(opts);
  auto tallies = parallel_map(trials, workers, [&](std::size_t t) {
    Rng rng = trial_stream(master_seed, t);
    const auto pts = poisson_configuration(mean_points, rng);
    return est.tally(pts);
  });
  return est.finish(tallies);
}

// ---------------------------------------------------------------------------
// Kac-Rice two-point function of the Heisenberg field.

namespace {

using Eigen::MatrixXcd;

// Conditional covariance of the gradients at 0 and r e_1 given vanishing
// values, for one component of the chart field with covariance e^{x . conj y}.
MatrixXcd conditional_gradient_covariance(int m, double r, double* value_det) {
  std::vector<std::vector<Complex>> pts(2, std::vector<Complex>(m, 0.0));
  pts[1][0] = r;
  auto dot = [m](const std::vector<Complex>& x, const std::vector<Complex>& y) {
    Complex s = 0.0;
    for (int k = 0; k < m; ++k) s += x[k] * std::conj(y[k]);
    return s;
  };
  MatrixXcd vv(2, 2), gv(2 * m, 2), gg(2 * m, 2 * m);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Complex e = std::exp(dot(pts[a], pts[b]));
      vv(a, b) = e;
      for (int i = 0; i < m; ++i) {
        gv(a * m + i, b) = std::conj(pts[b][i]) * e;
        for (int j = 0; j < m; ++j)
          gg(a * m + i, b * m + j) = (double(i == j) + std::conj(pts[b][i]) * pts[a][j]) * e;
      }
    }
  *value_det = (vv(0, 0) * vv(1, 1) - vv(0, 1) * vv(1, 0)).real();
  // Schur complement of the value block.
  const MatrixXcd schur = gg - gv * vv.inverse() * gv.adjoint();
  return 0.5 * (schur + schur.adjoint());
}

Complex det_small(const MatrixXcd& a) {
  switch (a.rows()) {
    case 1:
      return a(0, 0);
    case 2:
      return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default:
      return a.determinant();
  }
}

}  // namespace

KappaEstimate kappa_kacrice(int m, double r, std::size_t mc_samples, std::uint64_t seed) {
  if (m < 1 || m > 3) throw std::invalid_argument("kappa_kacrice supports m = 1, 2, 3");
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  if (r < 1e-3) throw ConditioningError("two-point conditioning is singular below r = 1e-3");
  double value_det = 0.0;
  const MatrixXcd c = conditional_gradient_covariance(m, r, &value_det);
  double factorial = 1.0;
  for (int k = 2; k <= m; ++k) factorial *= k;
  // kappa = E|det J1|^2 |det J2|^2 / (det A)^m / (m!)^2
  const double norm = std::pow(value_det, m) * factorial * factorial;
  if (m == 1) {
    const double num = c(0, 0).real() * c(1, 1).real() + std::norm(c(0, 1));
    return {num / norm, 0.0};
  }
  if (mc_samples < 2) throw std::invalid_argument("need at least two Monte Carlo samples");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(c);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const MatrixXcd root = es.eigenvectors() * lam.asDiagonal();
  Rng rng = trial_stream(seed, 0x4b52 + static_cast<std::uint64_t>(m), 0);
  const int n = 2 * m;
  Eigen::VectorXcd g(n), x(n);
  MatrixXcd j1(m, m), j2(m, m);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (int row = 0; row < m; ++row) {
      for (int k = 0; k < n; ++k) g(k) = standard_complex_gaussian(rng);
      x.noalias() = root * g;
      for (int k = 0; k < m; ++k) {
        j1(row, k) = x(k);
        j2(row, k) = x(m + k);
      }
    }
    const double v = std::norm(det_small(j1)) * std::norm(det_small(j2));
    const double delta = v - mean;
    mean += delta / double(s + 1);
    m2 += delta * (v - mean);
  }
  const double sd = std::sqrt(m2 / double(mc_samples - 1));
  return {mean / norm, sd / std::sqrt(double(mc_samples)) / norm};
}

double kappa_asymptote(int m, double r) { return (m + 1) / 4.0 * std::pow(r, 4 - 2 * m); }

std::size_t CurveComparison::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

CurveComparison compare_curves(const PairCorrelationCurve& a, const AnalyticCurve& b, double rlo, double rhi) {
  CurveComparison rep;
  const double tol = 1e-12 * std::max(1.0, rhi);
  for (std::size_t k = 0; k < a.bins(); ++k) {
    const double lo = a.bin_edges[k], hi = a.bin_edges[k + 1];
    if (lo < rlo - tol || hi > rhi + tol) continue;
    // Average of b over the bin with the estimator's Fubini-Study weight.
    double wsum = 0.0, vsum = 0.0, esum = 0.0;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * kGlNodes[q];
      const double u = r / a.scale;
      const double w = kGlWeights[q] * r / std::pow(1.0 + u * u, 2);
      const auto v = b(r);
      wsum += w;
      vsum += w * v.value;
      esum += w * v.std_error;
    }
    const double ref = vsum / wsum, ref_err = esum / wsum;
    const double diff = a.kappa_hat[k] - ref;
    const double se = std::hypot(a.std_errors[k], ref_err);
    const double z = se > 0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    const double rel = ref != 0.0 ? std::abs(diff / ref) : std::abs(diff);
    rep.bins.push_back(k);
    rep.reference.push_back(ref);
    rep.relative_deviation.push_back(rel);
    rep.z_scores.push_back(z);
    rep.flagged.push_back(std::abs(z) > 3.0);
    rep.max_relative_deviation = std::max(rep.max_relative_deviation, rel);
  }
  if (rep.bins.empty()) throw std::invalid_argument("curve and band [rlo, rhi] do not overlap");
  return rep;
}

PowerLawFit fit_power_law(const PairCorrelationCurve& c, double rlo, double rhi) {
  const double tol = 1e-12 * std::max(1.0, rhi);
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  PowerLawFit fit;
  for (std::size_t k = 0; k < c.bins(); ++k) {
    if (c.bin_edges[k] < rlo - tol || c.bin_edges[k + 1] > rhi + tol) continue;
    if (!(c.kappa_hat[k] > 0.0)) continue;
    const double x = std::log(c.r_eff(k)), y = std::log(c.kappa_hat[k]);
    const double rel = c.std_errors[k] / c.kappa_hat[k];
    const double w = rel > 0 ? 1.0 / (rel * rel) : double(c.pair_count[k]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++fit.bins_used;
  }
  if (fit.bins_used < 2) throw std::invalid_argument("power-law fit needs at least two populated bins");
  const double den = sw * sxx - sx * sx;
  fit.exponent = (sw * sxy - sx * sy) / den;
  fit.log_prefactor = (sy - fit.exponent * sx) / sw;
  fit.exponent_stderr = std::sqrt(sw / den);
  return fit;
}

KappaEstimate band_average(const PairCorrelationCurve& c, double rlo, double rhi) {
  const double tol = 1e-12 * std::max(1.0, rhi);
  double w = 0, v = 0, e = 0;
  for (std::size_t k = 0; k < c.bins(); ++k) {
    if (c.bin_edges[k] < rlo - tol || c.bin_edges[k + 1] > rhi + tol) continue;
    const double wk = double(c.pair_count[k]);
    w += wk;
    v += wk * c.kappa_hat[k];
    e += wk * wk * c.std_errors[k] * c.std_errors[k];
  }
  if (w <= 0) throw std::invalid_argument("no populated bins in the band");
  return {v / w, std::sqrt(e) / w};
}

// ---------------------------------------------------------------------------
// Densities.

DensityGrid DensityGrid::cartesian(double x0, double x1, std::size_t nx, double y0, double y1, std::size_t ny) {
  if (!(x1 > x0) || !(y1 > y0) || nx == 0 || ny == 0) throw std::invalid_argument("empty cartesian grid");
  DensityGrid g;
  g.kind = Kind::Cartesian;
  g.x0 = x0;
  g.x1 = x1;
  g.y0 = y0;
  g.y1 = y1;
  g.nx = nx;
  g.ny = ny;
  return g;
}

DensityGrid DensityGrid::radial(std::vector<double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("radial grid needs at least two edges");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    if (!(edges[k + 1] > edges[k]) || edges[k] < 0) throw std::invalid_argument("radial edges must increase");
  DensityGrid g;
  g.kind = Kind::Radial;
  g.radial_edges = std::move(edges);
  return g;
}

std::size_t DensityGrid::cells() const { return kind == Kind::Cartesian ? nx * ny : radial_edges.size() - 1; }

std::size_t DensityGrid::locate(Complex z) const {
  if (kind == Kind::Cartesian) {
    const double fx = (z.real() - x0) / (x1 - x0), fy = (z.imag() - y0) / (y1 - y0);
    if (!(fx >= 0 && fx < 1 && fy >= 0 && fy < 1)) return cells();
    const auto ix = std::min(nx - 1, static_cast<std::size_t>(fx * nx));
    const auto iy = std::min(ny - 1, static_cast<std::size_t>(fy * ny));
    return iy * nx + ix;
  }
  const double r = std::abs(z);
  if (r < radial_edges.front() || !(r < radial_edges.back())) return cells();
  const auto it = std::upper_bound(radial_edges.begin(), radial_edges.end(), r);
  return static_cast<std::size_t>(it - radial_edges.begin()) - 1;
}

double DensityGrid::area(std::size_t cell) const {
  if (kind == Kind::Cartesian) return (x1 - x0) / nx * (y1 - y0) / ny;
  const double a = radial_edges[cell], b = radial_edges[cell + 1];
  return kPi * (b * b - a * a);
}

Complex DensityGrid::centre(std::size_t cell) const {
  if (kind == Kind::Cartesian) {
    const std::size_t ix = cell % nx, iy = cell / nx;
    return {x0 + (ix + 0.5) * (x1 - x0) / nx, y0 + (iy + 0.5) * (y1 - y0) / ny};
  }
  return {0.5 * (radial_edges[cell] + radial_edges[cell + 1]), 0.0};
}

double DensityMap::density(std::size_t cell) const {
  if (trials == 0) return 0.0;
  return counts[cell] / (double(trials) * grid.area(cell) * normalization);
}

DensityMap empirical_density(const SpecPtr& spec, const DensityGrid& grid, const TrialRunOptions& run,
                             bool torus_only, FailureAccount* failures) {
  if (spec->dim() != 1) throw std::invalid_argument("density sampling needs m = 1");
  if (run.trials == 0) throw std::invalid_argument("trials must be positive");
  const std::size_t cells = grid.cells();
  struct Chunk {
    std::vector<std::uint64_t> counts;
    std::size_t ok = 0, failed = 0;
  };
  constexpr std::size_t kChunk = 64;
  const std::size_t nchunks = (run.trials + kChunk - 1) / kChunk;
  auto chunks = parallel_map(nchunks, run.workers, [&](std::size_t c) {
    Chunk out;
    out.counts.assign(cells, 0);
    const std::size_t end = std::min(run.trials, (c + 1) * kChunk);
    for (std::size_t t = c * kChunk; t < end; ++t) {
      Rng rng = trial_stream(run.master_seed, t);
      const auto s = sample_section(spec, rng);
      ZeroSet zs;
      try {
        zs = roots_cp1(s, run.solver);
      } catch (const SolverFailure&) {
        ++out.failed;
        continue;
      }
      ++out.ok;
      for (const auto& z : zs.chart_zeros) {
        if (torus_only && z.point[0] == Complex(0.0)) continue;
        const auto cell = grid.locate(z.point[0]);
        if (cell < cells) out.counts[cell] += static_cast<std::uint64_t>(z.multiplicity);
      }
    }
    return out;
  });
  DensityMap map;
  map.grid = grid;
  map.counts.assign(cells, 0.0);
  map.normalization = double(spec->degree());
  map.torus_only = torus_only;
  FailureAccount acc;
  acc.trials = run.trials;
  std::vector<std::uint64_t> total(cells, 0);
  for (const auto& ch : chunks) {
    map.trials += ch.ok;
    acc.failures += ch.failed;
    for (std::size_t k = 0; k < cells; ++k) total[k] += ch.counts[k];
  }
  for (std::size_t k = 0; k < cells; ++k) map.counts[k] = double(total[k]);
  if (failures) *failures = acc;
  check_failures(acc);
  return map;
}

KappaEstimate mean_minimal_gap(const SpecPtr& spec, const TrialRunOptions& run, FailureAccount* failures) {
  if (spec->dim() != 1) throw std::invalid_argument("gap sampling needs m = 1");
  if (run.trials < 2) throw std::invalid_argument("need at least two trials");
  auto gaps = parallel_map(run.trials, run.workers, [&](std::size_t t) -> std::optional<double> {
    Rng rng = trial_stream(run.master_seed, t);
    const auto s = sample_section(spec, rng);
    try {
      const auto pts = expand_points(roots_cp1(s, run.solver));
      double best = INFINITY;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
          const double d = std::abs(pts[i] - pts[j]) /
                           std::sqrt((1.0 + std::norm(pts[i])) * (1.0 + std::norm(pts[j])));
          best = std::min(best, d);
        }
      return best;
    } catch (const SolverFailure&) {
      return std::nullopt;
    }
  });
  FailureAccount acc;
  acc.trials = run.trials;
  double sum = 0, sumsq = 0;
  std::size_t n = 0;
  for (const auto& g : gaps) {
    if (!g) {
      ++acc.failures;
      continue;
    }
    if (!std::isfinite(*g)) continue;
    sum += *g;
    sumsq += *g * *g;
    ++n;
  }
  if (failures) *failures = acc;
  check_failures(acc);
  if (n < 2) throw std::invalid_argument("fewer than two configurations with a pair of zeros");
  const double mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1));
  return {mean, std::sqrt(var / n)};
}

}  // namespace zerostat
