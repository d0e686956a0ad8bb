#include "zerostat/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "zerostat/errors.hpp"

namespace zerostat {

namespace {

constexpr double kPi = std::numbers::pi;

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

Complex hermitian_dot(std::span<const Complex> z, std::span<const Complex> w) {
  Complex s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += z[j] * std::conj(w[j]);
  return s;
}

double norm_sq(std::span<const Complex> z) {
  double s = 0.0;
  for (const auto& c : z) s += std::norm(c);
  return s;
}

// Kahan-compensated complex accumulator.
struct CompensatedSum {
  double re = 0, im = 0, cre = 0, cim = 0;
  void add(Complex x) {
    const double yr = x.real() - cre;
    const double tr = re + yr;
    cre = (tr - re) - yr;
    re = tr;
    const double yi = x.imag() - cim;
    const double ti = im + yi;
    cim = (ti - im) - yi;
    im = ti;
  }
  Complex value() const { return {re, im}; }
};

void check_dims(int m, std::span<const Complex> z, std::span<const Complex> w) {
  if (static_cast<int>(z.size()) != m || static_cast<int>(w.size()) != m)
    throw std::invalid_argument("kernel arguments must have dimension m");
}

}  // namespace

Complex KernelValue::value() const {
  if (mantissa == Complex(0.0)) return 0.0;
  return mantissa * std::exp(log_scale);
}

double KernelValue::log_abs() const {
  if (mantissa == Complex(0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(mantissa)) + log_scale;
}

KernelValue kernel_full(int m, int N, std::span<const Complex> z, std::span<const Complex> w) {
  if (m < 1 || m > kMaxDim) throw std::invalid_argument("kernel_full supports m <= 3");
  if (N < 0) throw std::invalid_argument("negative degree");
  check_dims(m, z, w);
  KernelValue k{Complex(1.0), log_binomial(N + m, m), N, m};
  if (N == 0) return k;
  const Complex t = 1.0 + hermitian_dot(z, w);
  if (t == Complex(0.0)) return {Complex(0.0), 0.0, N, m};
  k.mantissa = std::polar(1.0, N * std::arg(t));
  k.log_scale += N * std::log(std::abs(t));
  return k;
}

KernelValue kernel(const EnsembleSpec& spec, std::span<const Complex> z, std::span<const Complex> w) {
  const int m = spec.dim();
  check_dims(m, z, w);
  std::vector<double> log_zw(m), arg_zw(m);
  std::vector<bool> vanishes(m);
  for (int j = 0; j < m; ++j) {
    vanishes[j] = z[j] == Complex(0.0) || w[j] == Complex(0.0);
    if (!vanishes[j]) {
      log_zw[j] = std::log(std::abs(z[j])) + std::log(std::abs(w[j]));
      arg_zw[j] = std::arg(z[j]) - std::arg(w[j]);
    }
  }
  std::vector<double> logs;
  std::vector<double> phases;
  logs.reserve(spec.size());
  phases.reserve(spec.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& a = spec.basis()[i];
    double l = -spec.log_norms_sq()[i];
    double ph = 0.0;
    bool zero = false;
    for (int j = 0; j < m && !zero; ++j) {
      if (a[j] == 0) continue;
      if (vanishes[j]) {
        zero = true;
      } else {
        l += a[j] * log_zw[j];
        ph += a[j] * arg_zw[j];
      }
    }
    if (zero) continue;
    logs.push_back(l);
    phases.push_back(ph);
    top = std::max(top, l);
  }
  KernelValue k{Complex(0.0), 0.0, spec.degree(), m};
  if (logs.empty()) return k;
  CompensatedSum acc;
  for (std::size_t i = 0; i < logs.size(); ++i) acc.add(std::polar(std::exp(logs[i] - top), phases[i]));
  k.mantissa = acc.value();
  k.log_scale = top;
  return k;
}

KernelValue kernel_conditional(const LatticePolytope& P, int N, int degree,
                               std::span<const Complex> z, std::span<const Complex> w) {
  const auto spec = EnsembleSpec::constrained(P.dim(), degree, dilate(P, N));
  return kernel(spec, z, w);
}

Complex heisenberg_kernel(std::span<const Complex> u, std::span<const Complex> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dimension mismatch");
  return std::exp(hermitian_dot(u, v) - 0.5 * (norm_sq(u) + norm_sq(v)));
}

Complex scaled_kernel(int m, int N, std::span<const Complex> u, std::span<const Complex> v) {
  if (N < 1) throw std::invalid_argument("scaled kernel needs N >= 1");
  check_dims(m, u, v);
  const double root = std::sqrt(double(N));
  std::vector<Complex> z(u.begin(), u.end()), w(v.begin(), v.end());
  for (auto& c : z) c /= root;
  for (auto& c : w) c /= root;
  const auto k = kernel_full(m, N, z, w);
  if (k.mantissa == Complex(0.0)) return 0.0;
  // pi^m N^-m * (m!/pi^m) Pi_N * frame factors
  const double log_mod = std::lgamma(m + 1.0) - m * std::log(double(N)) + k.log_scale -
                         0.5 * N * (std::log1p(norm_sq(z)) + std::log1p(norm_sq(w)));
  return k.mantissa * std::exp(log_mod);
}

double scaled_kernel_error(int m, int N, std::span<const Complex> u, std::span<const Complex> v) {
  return std::abs(scaled_kernel(m, N, u, v) - heisenberg_kernel(u, v));
}

double fubini_study_density(std::span<const Complex> z) {
  const double m = double(z.size());
  const double s = norm_sq(z);
  return (m + (m - 1.0) * s) / (kPi * (1.0 + s) * (1.0 + s));
}

double expected_density(const EnsembleSpec& spec, std::span<const Complex> z, double h) {
  if (!(h >= 1e-5 && h <= 1e-2)) throw std::invalid_argument("stencil step must lie in [1e-5, 1e-2]");
  const int m = spec.dim();
  if (static_cast<int>(z.size()) != m) throw std::invalid_argument("point dimension differs from m");
  const int N = spec.degree();
  auto log_kernel = [&](std::span<const Complex> x) {
    const auto k = spec.is_full() ? kernel_full(m, N, x, x) : kernel(spec, x, x);
    const double v = k.log_abs() - N * std::log1p(norm_sq(x));
    if (!std::isfinite(v)) {
      std::string where;
      for (const auto& c : x) where += "(" + std::to_string(c.real()) + "," + std::to_string(c.imag()) + ")";
      throw KernelUnderflowError("log kernel is not finite at " + where +
                                 "; the basis sections all vanish or underflow there");
    }
    return v;
  };
  std::vector<Complex> x(z.begin(), z.end());
  const double centre = log_kernel(x);
  auto laplacian = [&](int j, double step) {
    double acc = -4.0 * centre;
    for (Complex d : {Complex(step, 0), Complex(-step, 0), Complex(0, step), Complex(0, -step)}) {
      x[j] = z[j] + d;
      acc += log_kernel(x);
    }
    x[j] = z[j];
    return acc / (step * step);
  };
  double trace = 0.0;
  for (int j = 0; j < m; ++j) trace += (4.0 * laplacian(j, 0.5 * h) - laplacian(j, h)) / 3.0;
  const double density = trace / (4.0 * kPi) + N * fubini_study_density(z);
  if (!std::isfinite(density)) throw KernelUnderflowError("expected density is not finite");
  return std::max(density, 0.0);
}

namespace {

void flag_singularity(JetCovariance& jc) {
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < jc.points.size(); ++a)
    for (std::size_t b = a + 1; b < jc.points.size(); ++b) {
      double d = 0.0;
      for (int j = 0; j < jc.m; ++j) d += std::norm(jc.points[a][j] - jc.points[b][j]);
      closest = std::min(closest, std::sqrt(d));
    }
  const Eigen::VectorXd diag = jc.matrix.diagonal().real();
  bool singular = closest < 1e-8;
  if (!singular && diag.minCoeff() > 0) {
    const Eigen::VectorXd inv = diag.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXcd normalized = inv.asDiagonal() * jc.matrix * inv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(normalized, Eigen::EigenvaluesOnly);
    singular = es.eigenvalues().minCoeff() < 1e-12 * es.eigenvalues().maxCoeff();
  }
  jc.near_singular = singular;
}

}  // namespace

JetCovariance jet_covariance(const EnsembleSpec& spec, std::span<const ChartPoint> points) {
  const int m = spec.dim();
  const int N = spec.degree();
  JetCovariance jc;
  jc.m = m;
  jc.points.assign(points.begin(), points.end());
  for (const auto& p : jc.points)
    if (static_cast<int>(p.size()) != m) throw std::invalid_argument("point dimension differs from m");
  const Eigen::Index n = static_cast<Eigen::Index>(points.size()) * (m + 1);
  // Powers z_j^k for every point and coordinate.
  std::vector<std::vector<std::vector<Complex>>> pw(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    pw[p].assign(m, std::vector<Complex>(N + 1));
    for (int j = 0; j < m; ++j) {
      pw[p][j][0] = 1.0;
      for (int k = 1; k <= N; ++k) pw[p][j][k] = pw[p][j][k - 1] * points[p][j];
    }
  }
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(n * n));
  Eigen::VectorXcd x(n);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& a = spec.basis()[i];
    const double c = std::exp(-spec.log_norms_sq()[i]);
    for (std::size_t p = 0; p < points.size(); ++p) {
      Complex v = 1.0;
      for (int j = 0; j < m; ++j) v *= pw[p][j][a[j]];
      x(jc.value_index(p)) = v;
      for (int j = 0; j < m; ++j) {
        Complex d = 0.0;
        if (a[j] > 0) {
          d = double(a[j]);
          for (int l = 0; l < m; ++l) d *= pw[p][l][l == j ? a[l] - 1 : a[l]];
        }
        x(jc.gradient_index(p, j)) = d;
      }
    }
    // Fixed block schedule: row-major accumulation, one basis term at a time.
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index s = 0; s < n; ++s)
        acc[static_cast<std::size_t>(r * n + s)].add(c * x(r) * std::conj(x(s)));
  }
  jc.matrix.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index s = 0; s < n; ++s) jc.matrix(r, s) = acc[static_cast<std::size_t>(r * n + s)].value();
  flag_singularity(jc);
  return jc;
}

JetCovariance heisenberg_jet_covariance(int m, std::span<const ChartPoint> points) {
  JetCovariance jc;
  jc.m = m;
  jc.points.assign(points.begin(), points.end());
  for (const auto& p : jc.points)
    if (static_cast<int>(p.size()) != m) throw std::invalid_argument("point dimension differs from m");
  const Eigen::Index n = static_cast<Eigen::Index>(points.size()) * (m + 1);
  jc.matrix.resize(n, n);
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t q = 0; q < points.size(); ++q) {
      const auto& a = points[p];
      const auto& b = points[q];
      const Complex k = std::exp(hermitian_dot(a, b));
      jc.matrix(jc.value_index(p), jc.value_index(q)) = k;
      for (int i = 0; i < m; ++i) {
        jc.matrix(jc.gradient_index(p, i), jc.value_index(q)) = std::conj(b[i]) * k;
        jc.matrix(jc.value_index(p), jc.gradient_index(q, i)) = a[i] * k;
        for (int j = 0; j < m; ++j)
          jc.matrix(jc.gradient_index(p, i), jc.gradient_index(q, j)) =
              ((i == j ? 1.0 : 0.0) + std::conj(b[i]) * a[j]) * k;
      }
    }
  flag_singularity(jc);
  return jc;
}

}  // namespace zerostat
