#include "zerostat/norms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>
#include <gsl/gsl_integration.h>

#include "zerostat/errors.hpp"
#include "zerostat/parallel.hpp"
#include "zerostat/rng.hpp"

namespace zerostat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GaussLegendre {
  std::vector<double> nodes, weights;  // on [0, 1]
};

const GaussLegendre& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  if (!t) throw std::runtime_error("Gauss-Legendre table allocation failed");
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(0.0, 1.0, i, &gl.nodes[i], &gl.weights[i], t);
  gsl_integration_glfixed_table_free(t);
  return cache.emplace(n, std::move(gl)).first->second;
}

// Plans are created under a lock and executed on per-call buffers.
class RingTransform {
 public:
  explicit RingTransform(int n) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    plan_ = plan_for(n, in_, out_);
  }
  ~RingTransform() {
    fftw_free(in_);
    fftw_free(out_);
  }
  RingTransform(const RingTransform&) = delete;
  RingTransform& operator=(const RingTransform&) = delete;

  // |sum_k b_k e^{i k theta_j}| at theta_j = 2 pi j / n.
  void magnitudes(const std::vector<Complex>& b, std::vector<double>& out) {
    std::fill(reinterpret_cast<double*>(in_), reinterpret_cast<double*>(in_) + 2 * n_, 0.0);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::size_t j = k % static_cast<std::size_t>(n_);
      in_[j][0] += b[k].real();
      in_[j][1] += b[k].imag();
    }
    fftw_execute_dft(plan_, in_, out_);
    out.resize(n_);
    for (int j = 0; j < n_; ++j) out[j] = std::hypot(out_[j][0], out_[j][1]);
  }

 private:
  static fftw_plan plan_for(int n, fftw_complex* in, fftw_complex* out) {
    static std::mutex mu;
    static std::map<int, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(mu);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;
    fftw_plan p = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    plans.emplace(n, p);
    return p;
  }

  int n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

int nice_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

struct ChartCoefficients {
  int N = 0;
  std::vector<Complex> a;        // chart coefficients a_k
  std::vector<double> log_abs;   // log |a_k|, -inf for zero
  std::vector<Complex> phase;    // a_k / |a_k|
};

ChartCoefficients chart_coefficients(const SectionSample& s) {
  if (s.spec->dim() != 1) throw std::invalid_argument("norms are implemented for m = 1");
  ChartCoefficients c;
  c.N = s.spec->degree();
  c.a.assign(c.N + 1, Complex(0.0));
  c.log_abs.assign(c.N + 1, -INFINITY);
  c.phase.assign(c.N + 1, Complex(0.0));
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
    const int k = s.spec->basis()[i][0];
    const double mag = std::abs(s.coeffs[i]);
    if (mag == 0.0) continue;
    c.a[k] = s.chart_coefficient(i);
    c.log_abs[k] = std::log(mag) - 0.5 * s.spec->log_norms_sq()[i];
    c.phase[k] = s.coeffs[i] / mag;
  }
  return c;
}

// Ring coefficients b_k = a_k mu^{k/2} (1-mu)^{(N-k)/2}: |s|_h on the ring
// of height mu is |sum_k b_k e^{i k theta}|.
void ring_coefficients(const ChartCoefficients& c, double mu, std::vector<Complex>& b) {
  b.assign(c.N + 1, Complex(0.0));
  const double lm = std::log(mu), l1 = std::log1p(-mu);
  for (int k = 0; k <= c.N; ++k) {
    if (!std::isfinite(c.log_abs[k])) continue;
    b[k] = c.phase[k] * std::exp(c.log_abs[k] + 0.5 * k * lm + 0.5 * (c.N - k) * l1);
  }
}

bool even_integer(double p) { return std::isfinite(p) && p == std::floor(p) && std::fmod(p, 2.0) == 0.0; }

// Integral of |s|_h^p against the Fubini-Study probability measure.
double moment(const ChartCoefficients& c, double p, int mu_nodes, int theta_nodes) {
  const auto& gl = gauss_legendre(mu_nodes);
  RingTransform ring(theta_nodes);
  std::vector<Complex> b;
  std::vector<double> mag;
  double total = 0.0;
  for (int i = 0; i < mu_nodes; ++i) {
    ring_coefficients(c, gl.nodes[i], b);
    ring.magnitudes(b, mag);
    double acc = 0.0;
    for (double v : mag) acc += std::pow(v, p);
    total += gl.weights[i] * acc / theta_nodes;
  }
  return total;
}

std::pair<int, int> grid_for(int N, double p, const Quadrature& q) {
  int mu = q.mu_nodes, th = q.theta_nodes;
  if (mu <= 0) mu = even_integer(p) ? static_cast<int>(std::ceil(p * N / 4.0)) + 1
                                   : static_cast<int>(std::ceil(p * N / 4.0)) + 16;
  if (th <= 0) th = even_integer(p) ? static_cast<int>(std::floor(p * N / 2.0)) + 1
                                   : static_cast<int>(std::ceil(p * N / 2.0)) + 16;
  return {std::max(mu, 4), nice_size(std::max(th, 8))};
}

double checked_moment_norm(const ChartCoefficients& c, double p, const Quadrature& q) {
  const auto [mu, th] = grid_for(c.N, p, q);
  const double v = std::pow(moment(c, p, mu, th), 1.0 / p);
  if (q.check_resolution) {
    const double fine = std::pow(moment(c, p, 2 * mu, nice_size(2 * th)), 1.0 / p);
    if (std::abs(fine - v) > q.tolerance * std::abs(fine))
      throw ResolutionError("L^" + std::to_string(p) + " quadrature moved by more than the tolerance on grid doubling");
  }
  return v;
}

// log |s|_h and the ascent direction conj(s'/s) - N z / (1+|z|^2) in the
// chart where |z| <= 1.
struct LogValue {
  double f;
  Complex grad;
};

LogValue log_hermitian(const std::vector<Complex>& a, int N, Complex z) {
  Complex s = 0.0, ds = 0.0;
  for (int k = N; k >= 0; --k) {
    ds = ds * z + s;
    s = s * z + a[k];
  }
  const double q = 1.0 + std::norm(z);
  if (s == Complex(0.0)) return {-INFINITY, 0.0};
  return {std::log(std::abs(s)) - 0.5 * N * std::log(q), std::conj(ds / s) - double(N) * z / q};
}

double ascend(const ChartCoefficients& c, Complex z) {
  std::vector<Complex> rev(c.a.rbegin(), c.a.rend());
  bool flipped = std::abs(z) > 1.0;
  if (flipped) z = 1.0 / z;
  LogValue cur = log_hermitian(flipped ? rev : c.a, c.N, z);
  for (int it = 0; it < 200; ++it) {
    const double q = 1.0 + std::norm(z);
    Complex step = cur.grad * q * q / (2.0 * std::max(c.N, 1));
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      Complex nz = z + step;
      bool nflip = flipped;
      if (std::abs(nz) > 1.0) {
        nz = 1.0 / nz;
        nflip = !flipped;
      }
      const LogValue nv = log_hermitian(nflip ? rev : c.a, c.N, nz);
      if (nv.f > cur.f) {
        z = nz;
        flipped = nflip;
        cur = nv;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || std::abs(step) < 1e-13) break;
  }
  return cur.f;
}

double sup_norm(const ChartCoefficients& c, int side) {
  RingTransform ring(side);
  std::vector<Complex> b;
  std::vector<double> mag;
  struct Cell {
    double value;
    int i, j;
  };
  std::vector<Cell> best;
  for (int i = 0; i < side; ++i) {
    const double mu = (i + 0.5) / side;
    ring_coefficients(c, mu, b);
    ring.magnitudes(b, mag);
    for (int j = 0; j < side; ++j) best.push_back({mag[j], i, j});
  }
  const std::size_t top = std::min<std::size_t>(10, best.size());
  std::partial_sort(best.begin(), best.begin() + top, best.end(),
                    [](const Cell& x, const Cell& y) { return x.value > y.value; });
  double logmax = std::log(best[0].value);
  for (std::size_t k = 0; k < top; ++k) {
    const double mu = (best[k].i + 0.5) / side;
    const Complex z = std::polar(std::sqrt(mu / (1.0 - mu)), kTwoPi * best[k].j / side);
    logmax = std::max(logmax, ascend(c, z));
  }
  return std::exp(logmax);
}

}  // namespace

double l2_norm(const SectionSample& s, const Quadrature& quad) {
  return checked_moment_norm(chart_coefficients(s), 2.0, quad);
}

double lp_norm(const SectionSample& s, double p, const Quadrature& quad) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be at least 1");
  const auto c = chart_coefficients(s);
  Quadrature q2 = quad;
  q2.mu_nodes = q2.theta_nodes = 0;
  const double l2 = checked_moment_norm(c, 2.0, q2);
  if (!(l2 > 0.0)) throw std::invalid_argument("zero section");
  if (std::isinf(p)) {
    const int side = std::max(512, static_cast<int>(std::ceil(8.0 * std::sqrt(double(c.N)))));
    const double v = sup_norm(c, side);
    if (quad.check_resolution) {
      const double fine = sup_norm(c, 2 * side);
      if (std::abs(fine - v) > quad.tolerance * fine)
        throw ResolutionError("sup norm moved by more than the tolerance on grid doubling");
    }
    return v / l2;
  }
  return checked_moment_norm(c, p, quad) / l2;
}

double cap_lp_norm(const SectionSample& s, double p, Complex centre, double cap_mu, int mu_nodes, int theta_nodes) {
  if (!(cap_mu > 0.0 && cap_mu <= 1.0)) throw std::invalid_argument("cap_mu must lie in (0, 1]");
  if (mu_nodes < 1 || theta_nodes < 1) throw std::invalid_argument("node counts must be positive");
  const auto c = chart_coefficients(s);
  const double l2 = checked_moment_norm(c, 2.0, Quadrature{0, 0, false, 1e-3});
  std::vector<Complex> rev(c.a.rbegin(), c.a.rend());
  const auto& gl = gauss_legendre(mu_nodes);
  double acc = 0.0, sup = -INFINITY;
  for (int i = 0; i < mu_nodes; ++i) {
    const double mu = cap_mu * gl.nodes[i];
    const double rad = std::sqrt(mu / (1.0 - mu));
    double ring = 0.0;
    for (int j = 0; j < theta_nodes; ++j) {
      const Complex w = std::polar(rad, kTwoPi * j / theta_nodes);
      const Complex z = (w + centre) / (1.0 - std::conj(centre) * w);
      const double f = std::abs(z) <= 1.0 ? log_hermitian(c.a, c.N, z).f : log_hermitian(rev, c.N, 1.0 / z).f;
      if (std::isinf(p)) sup = std::max(sup, f);
      else ring += std::exp(p * f);
    }
    acc += gl.weights[i] * ring / theta_nodes;
  }
  if (std::isinf(p)) return std::exp(sup) / l2;
  // acc integrates over mu / cap_mu in [0, 1], i.e. against the cap measure of mass 1.
  return std::pow(acc, 1.0 / p) / l2;
}

NormSeries growth_series(const GrowthOptions& opts) {
  if (opts.degrees.empty()) throw std::invalid_argument("no degrees given");
  for (std::size_t k = 0; k < opts.degrees.size(); ++k) {
    if (opts.degrees[k] < 16 || opts.degrees[k] > 1024)
      throw std::invalid_argument("degrees must lie in [16, 1024]");
    if (k > 0 && opts.degrees[k] <= opts.degrees[k - 1]) throw std::invalid_argument("degrees must increase");
  }
  if (opts.trials < 2) throw std::invalid_argument("need at least two trials");
  NormSeries out;
  out.degrees = opts.degrees;
  out.p = opts.p;
  out.trials = opts.trials;
  for (int N : opts.degrees) {
    const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
    const auto values = parallel_map(opts.trials, opts.workers, [&](std::size_t t) {
      Rng rng = trial_stream(opts.master_seed, static_cast<std::uint64_t>(N), t);
      const auto s = sample_section(spec, rng);
      Quadrature q;
      q.check_resolution = (t == 0);
      return lp_norm(s, opts.p, q);
    });
    double sum = 0.0, sumsq = 0.0;
    for (double v : values) {
      sum += v;
      sumsq += v * v;
    }
    const double n = double(values.size());
    const double mean = sum / n;
    out.means.push_back(mean);
    out.stderrs.push_back(std::sqrt(std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) / n));
  }
  return out;
}

}  // namespace zerostat
