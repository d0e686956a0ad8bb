#include "zerostat/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "zerostat/errors.hpp"
#include "zerostat/io.hpp"

namespace zerostat {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct NewtonStep {
  Complex ratio;        // p / p'
  double residual;      // |p| / sum |q_k| |z|^k
  double d_residual;    // |p'| / sum k |q_k| |z|^{k-1}
};

// Horner in z for |z| <= 1, in 1/z on the reversed polynomial otherwise.
NewtonStep newton_step(std::span<const Complex> q, Complex z) {
  const int d = static_cast<int>(q.size()) - 1;
  if (std::abs(z) <= 1.0) {
    Complex p = q[d], dp = 0.0;
    const double az = std::abs(z);
    double s = std::abs(q[d]), ds = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      dp = dp * z + p;
      ds = ds * az + s;
      p = p * z + q[k];
      s = s * az + std::abs(q[k]);
    }
    return {p / dp, std::abs(p) / s, ds > 0 ? std::abs(dp) / ds : 0.0};
  }
  const Complex w = 1.0 / z;
  const double aw = std::abs(w);
  Complex r = q[0], dr = 0.0;
  double s = std::abs(q[0]), ds = 0.0;
  // reversed coefficients r_k = q_{d-k}: r(w) = sum_k q_{d-k} w^k
  for (int k = 1; k <= d; ++k) {
    dr = dr * w + r;
    ds = ds * aw + s;
    r = r * w + q[k];
    s = s * aw + std::abs(q[k]);
  }
  // p(z) = z^d r(w), p'(z) = z^{d-1} (d r(w) - w r'(w))
  const Complex denom = double(d) * r - w * dr;
  // derivative residual: |p'| / sum k|q_k||z|^{k-1}, both scaled by |z|^{1-d}
  double dscale = 0.0;
  {
    double acc = 0.0;
    for (int k = d; k >= 1; --k) acc = acc * aw + k * std::abs(q[k]);
    dscale = acc;  // sum_k k |q_k| |w|^{d-k}
  }
  return {z * r / denom, std::abs(r) / s, dscale > 0 ? std::abs(denom) / dscale : 0.0};
}

// Bini's starting points: circles with radii from the upper convex hull of
// (k, log |q_k|).
std::vector<Complex> newton_polygon_start(std::span<const Complex> q) {
  const int d = static_cast<int>(q.size()) - 1;
  std::vector<int> idx;
  std::vector<double> lg;
  for (int k = 0; k <= d; ++k)
    if (q[k] != Complex(0.0)) {
      idx.push_back(k);
      lg.push_back(std::log(std::abs(q[k])));
    }
  std::vector<int> hull;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double cr = (idx[b] - idx[a]) * (lg[t] - lg[a]) - (lg[b] - lg[a]) * (idx[t] - idx[a]);
      if (cr >= 0) hull.pop_back();
      else break;
    }
    hull.push_back(static_cast<int>(t));
  }
  std::vector<Complex> z;
  z.reserve(d);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t e = 0; e + 1 < hull.size(); ++e) {
    const int i = idx[hull[e]], j = idx[hull[e + 1]];
    const int n = j - i;
    const double radius = std::exp((lg[hull[e]] - lg[hull[e + 1]]) / n);
    const double offset = two_pi * double(i) / d + 0.4;
    for (int l = 0; l < n; ++l) z.push_back(std::polar(radius, two_pi * l / n + offset));
  }
  return z;
}

void balance(Eigen::MatrixXcd& a) {
  constexpr double radix = 2.0, sqrdx = 4.0;
  const Eigen::Index n = a.rows();
  bool done = false;
  for (int sweep = 0; sweep < 100 && !done; ++sweep) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

struct Cluster {
  Complex z;
  int multiplicity;
  double residual;
};

// Merges near-coincident approximations and rejects clusters that sit on a
// simple root (a duplicated simple root means another root was missed).
bool cluster_roots(std::span<const Complex> q, std::span<const Complex> roots, const RootOptions& opts,
                   std::vector<Cluster>& out) {
  const std::size_t n = roots.size();
  std::vector<int> owner(n, -1);
  out.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] >= 0) continue;
    owner[i] = static_cast<int>(out.size());
    Cluster c{roots[i], 1, 0.0};
    Complex sum = roots[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (owner[j] >= 0) continue;
      const double scale = std::max(1.0, std::abs(roots[i]));
      if (std::abs(roots[i] - roots[j]) < opts.merge_distance * scale) {
        owner[j] = owner[i];
        sum += roots[j];
        ++c.multiplicity;
      }
    }
    c.z = sum / double(c.multiplicity);
    const auto st = newton_step(q, c.z);
    c.residual = st.residual;
    if (c.residual > opts.certify_threshold) return false;
    if (c.multiplicity > 1 && st.d_residual > 1e-6) return false;
    out.push_back(c);
  }
  // Distinct approximations very close to one simple root are also suspect.
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = a + 1; b < out.size(); ++b) {
      const double scale = std::max(1.0, std::abs(out[a].z));
      if (std::abs(out[a].z - out[b].z) < 1e-6 * scale) {
        const Complex mid = 0.5 * (out[a].z + out[b].z);
        if (newton_step(q, mid).d_residual > 1e-3) return false;
      }
    }
  return true;
}

}  // namespace

double relative_residual(std::span<const Complex> coeffs, Complex z) {
  return newton_step(coeffs, z).residual;
}

std::vector<Complex> aberth_roots(std::span<const Complex> q, std::span<const Complex> initial,
                                  int max_iterations, std::vector<bool>* converged_out) {
  const int d = static_cast<int>(q.size()) - 1;
  if (d < 1) return {};
  if (q[0] == Complex(0.0) || q[d] == Complex(0.0))
    throw std::invalid_argument("aberth_roots needs nonzero constant and leading coefficients");
  std::vector<Complex> z = initial.size() == static_cast<std::size_t>(d)
                               ? std::vector<Complex>(initial.begin(), initial.end())
                               : newton_polygon_start(q);
  if (d == 1) {
    z[0] = -q[0] / q[1];
    if (converged_out) converged_out->assign(1, true);
    return z;
  }
  std::vector<bool> done(d, false);
  const double stop = 8.0 * d * kEps;
  int remaining = d;
  for (int it = 0; it < max_iterations && remaining > 0; ++it) {
    for (int i = 0; i < d; ++i) {
      if (done[i]) continue;
      const auto st = newton_step(q, z[i]);
      if (st.residual <= stop) {
        done[i] = true;
        --remaining;
        continue;
      }
      Complex repulsion = 0.0;
      for (int j = 0; j < d; ++j)
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      Complex step = st.ratio / (1.0 - st.ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag()))
        step = Complex(1e-3, 1e-3) * std::max(1.0, std::abs(z[i]));
      z[i] -= step;
      if (std::abs(step) <= 2.0 * kEps * std::abs(z[i])) {
        done[i] = true;
        --remaining;
      }
    }
  }
  // One Newton polish on every root.
  for (int i = 0; i < d; ++i) {
    const auto st = newton_step(q, z[i]);
    const Complex cand = z[i] - st.ratio;
    if (std::isfinite(cand.real()) && std::isfinite(cand.imag()) &&
        newton_step(q, cand).residual < st.residual)
      z[i] = cand;
  }
  if (converged_out) *converged_out = done;
  return z;
}

std::vector<Complex> companion_roots(std::span<const Complex> q) {
  const int d = static_cast<int>(q.size()) - 1;
  if (d < 1) return {};
  if (q[d] == Complex(0.0)) throw std::invalid_argument("companion_roots needs a nonzero leading coefficient");
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 1; i < d; ++i) c(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) c(i, d - 1) = -q[i] / q[d];
  balance(c);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c, false);
  if (es.info() != Eigen::Success) throw SolverFailure("companion eigenvalue iteration did not converge");
  std::vector<Complex> out(d);
  for (int i = 0; i < d; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

int ZeroSet::chart_count() const {
  int n = 0;
  for (const auto& z : chart_zeros) n += z.multiplicity;
  return n;
}

ZeroSet roots_cp1(std::span<const Complex> coeffs, const RootOptions& opts) {
  if (coeffs.empty()) throw std::invalid_argument("empty coefficient vector");
  const int N = static_cast<int>(coeffs.size()) - 1;
  int top = N;
  while (top >= 0 && coeffs[top] == Complex(0.0)) --top;
  if (top < 0) throw std::invalid_argument("identically zero section has no isolated zeros");
  int low = 0;
  while (coeffs[low] == Complex(0.0)) ++low;

  ZeroSet zs;
  zs.m = 1;
  zs.target_count = N;
  zs.at_infinity = N - top;
  if (low > 0) zs.chart_zeros.push_back({ZeroPoint{Complex(0.0), Complex(0.0)}, 0.0, low});
  const int d = top - low;
  if (d == 0) return zs;
  const std::span<const Complex> q = coeffs.subspan(low, d + 1);

  std::vector<Cluster> clusters;
  std::vector<bool> converged;
  auto attempt = [&](std::span<const Complex> start) {
    const auto z = aberth_roots(q, start, opts.max_iterations, &converged);
    return cluster_roots(q, z, opts, clusters);
  };
  bool ok = attempt({});
  if (!ok) {
    // Restart from the eigenvalues of the balanced companion matrix.
    const auto start = companion_roots(q);
    ok = attempt(start);
  }
  if (!ok)
    throw SolverFailure("could not certify all " + std::to_string(d) + " roots of a degree-" +
                        std::to_string(N) + " section");
  for (const auto& c : clusters) zs.chart_zeros.push_back({ZeroPoint{c.z, Complex(0.0)}, c.residual, c.multiplicity});
  return zs;
}

ZeroSet roots_cp1(const SectionSample& sample, const RootOptions& opts) {
  if (sample.spec->dim() != 1) throw std::invalid_argument("roots_cp1 needs m = 1");
  const auto a = sample.univariate_coefficients();
  return roots_cp1(std::span<const Complex>(a), opts);
}

// ---------------------------------------------------------------------------
// Bivariate systems.

namespace {

struct DenseBivariate {
  int n = 0;  // table side: degree + 1
  std::vector<Complex> c;  // c[i * n + j] multiplies z1^i z2^j
  int total_degree = 0;
  int deg2 = 0;   // degree in z2
  int deg1 = 0;   // max degree in z1 over coefficients of z2^j

  Complex at(int i, int j) const { return c[i * n + j]; }

  explicit DenseBivariate(const SectionSample& s) {
    const int N = s.spec->degree();
    n = N + 1;
    c.assign(n * n, Complex(0.0));
    bool any = false;
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
      const auto& a = s.spec->basis()[k];
      const Complex v = s.chart_coefficient(k);
      c[a[0] * n + a[1]] = v;
      if (v != Complex(0.0)) {
        any = true;
        total_degree = std::max(total_degree, a[0] + a[1]);
        deg2 = std::max(deg2, a[1]);
        deg1 = std::max(deg1, a[0]);
      }
    }
    if (!any) throw std::invalid_argument("identically zero section");
  }

  // Coefficients of z2^j as polynomials in z1, evaluated at x.
  std::vector<Complex> in_z2(Complex x) const {
    std::vector<Complex> out(deg2 + 1, Complex(0.0));
    for (int j = 0; j <= deg2; ++j) {
      Complex acc = 0.0;
      for (int i = n - 1; i >= 0; --i) acc = acc * x + at(i, j);
      out[j] = acc;
    }
    return out;
  }

  struct Value {
    Complex f, fx, fy;
    double scale;
  };
  Value eval(Complex x, Complex y) const {
    Value v{0.0, 0.0, 0.0, 0.0};
    std::vector<Complex> px(n), py(n);
    px[0] = py[0] = 1.0;
    for (int k = 1; k < n; ++k) {
      px[k] = px[k - 1] * x;
      py[k] = py[k - 1] * y;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j + i < n; ++j) {
        const Complex a = at(i, j);
        if (a == Complex(0.0)) continue;
        v.f += a * px[i] * py[j];
        v.scale += std::abs(a) * std::abs(px[i]) * std::abs(py[j]);
        if (i > 0) v.fx += a * double(i) * px[i - 1] * py[j];
        if (j > 0) v.fy += a * double(j) * px[i] * py[j - 1];
      }
    return v;
  }
};

template <class Scalar>
Scalar lu_determinant(std::vector<Scalar> a, int n, double* condition) {
  using Real = typename Scalar::value_type;
  Scalar det = 1;
  Real pmax = 0, pmin = std::numeric_limits<Real>::infinity();
  for (int k = 0; k < n; ++k) {
    int piv = k;
    Real best = std::abs(a[k * n + k]);
    for (int r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > best) {
        best = std::abs(a[r * n + k]);
        piv = r;
      }
    if (best == Real(0)) {
      if (condition) *condition = std::numeric_limits<double>::infinity();
      return Scalar(0);
    }
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      det = -det;
    }
    const Scalar p = a[k * n + k];
    det *= p;
    pmax = std::max(pmax, best);
    pmin = std::min(pmin, best);
    for (int r = k + 1; r < n; ++r) {
      const Scalar f = a[r * n + k] / p;
      if (f == Scalar(0)) continue;
      for (int c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  if (condition) *condition = n ? double(pmax / pmin) : 1.0;
  return det;
}

// Sylvester determinant of f, g viewed as polynomials in z2.
Complex sylvester_resultant(const std::vector<Complex>& fa, const std::vector<Complex>& gb,
                            double extended_threshold) {
  const int df = static_cast<int>(fa.size()) - 1;
  const int dg = static_cast<int>(gb.size()) - 1;
  const int n = df + dg;
  if (n == 0) return 1.0;
  std::vector<Complex> s(n * n, Complex(0.0));
  for (int r = 0; r < dg; ++r)
    for (int j = 0; j <= df; ++j) s[r * n + r + (df - j)] = fa[j];
  for (int r = 0; r < df; ++r)
    for (int j = 0; j <= dg; ++j) s[(dg + r) * n + r + (dg - j)] = gb[j];
  double cond = 0.0;
  const Complex det = lu_determinant(s, n, &cond);
  if (cond <= extended_threshold) return det;
  std::vector<std::complex<long double>> sl(s.begin(), s.end());
  const auto detl = lu_determinant(sl, n, nullptr);
  return {double(detl.real()), double(detl.imag())};
}

double joint_residual(const DenseBivariate& f, const DenseBivariate& g, Complex x, Complex y) {
  const auto vf = f.eval(x, y);
  const auto vg = g.eval(x, y);
  // a vanishing scale means every term vanishes: an exact zero
  auto rel = [](Complex v, double scale) { return scale > 0.0 ? std::abs(v) / scale : 0.0; };
  return std::max(rel(vf.f, vf.scale), rel(vg.f, vg.scale));
}

void newton_refine(const DenseBivariate& f, const DenseBivariate& g, Complex& x, Complex& y) {
  double best = joint_residual(f, g, x, y);
  for (int it = 0; it < 30; ++it) {
    const auto vf = f.eval(x, y);
    const auto vg = g.eval(x, y);
    const Complex det = vf.fx * vg.fy - vf.fy * vg.fx;
    if (det == Complex(0.0)) return;
    const Complex dx = (vf.f * vg.fy - vf.fy * vg.f) / det;
    const Complex dy = (vf.fx * vg.f - vf.f * vg.fx) / det;
    const Complex nx = x - dx, ny = y - dy;
    const double r = joint_residual(f, g, nx, ny);
    if (!(r < best)) return;
    x = nx;
    y = ny;
    best = r;
    if (best < 4 * kEps) return;
  }
}

}  // namespace

ZeroSet solve_system_2d(const SectionSample& fs, const SectionSample& gs, const SystemOptions& opts) {
  if (fs.spec->dim() != 2 || gs.spec->dim() != 2) throw std::invalid_argument("solve_system_2d needs m = 2");
  const DenseBivariate f(fs), g(gs);
  if (f.total_degree > opts.max_degree || g.total_degree > opts.max_degree)
    throw std::invalid_argument("effective degree exceeds the cap of " + std::to_string(opts.max_degree));
  if (f.total_degree == 0 || g.total_degree == 0)
    throw DegeneracyError("constant equation: the system has no isolated zeros");
  if (f.deg2 == 0 && g.deg2 == 0) throw DegeneracyError("neither equation involves z2");

  const int bezout = f.total_degree * g.total_degree;
  const int bound = std::min(g.deg2 * f.deg1 + f.deg2 * g.deg1, bezout);

  // Resultant values on a circle, then inverse DFT.
  const int samples = bound + 1;
  std::vector<Complex> values(samples);
  double vmax = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Complex x = std::polar(1.0, 2.0 * std::numbers::pi * k / samples);
    values[k] = sylvester_resultant(f.in_z2(x), g.in_z2(x), opts.extended_precision_condition);
    vmax = std::max(vmax, std::abs(values[k]));
  }
  double fnorm = 0.0, gnorm = 0.0;
  for (const auto& c : f.c) fnorm += std::abs(c);
  for (const auto& c : g.c) gnorm += std::abs(c);
  const double natural = std::pow(fnorm, g.deg2) * std::pow(gnorm, f.deg2);
  if (!(vmax > 1e-12 * natural)) throw DegeneracyError("resultant vanishes identically: shared component");

  std::vector<Complex> res(samples);
  double cmax = 0.0;
  for (int k = 0; k < samples; ++k) {
    Complex acc = 0.0;
    for (int l = 0; l < samples; ++l)
      acc += values[l] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * l / samples);
    res[k] = acc / double(samples);
    cmax = std::max(cmax, std::abs(res[k]));
  }
  for (auto& c : res)
    if (std::abs(c) <= 1e-11 * cmax) c = 0.0;

  ZeroSet x_roots = roots_cp1(res, RootOptions{opts.certify_threshold, 1e-9, 500});

  ZeroSet out;
  out.m = 2;
  out.target_count = bezout;
  int finite = 0;
  std::vector<ZeroPoint> accepted;
  for (const auto& xr : x_roots.chart_zeros) {
    const Complex x = xr.point[0];
    // Candidates: zeros of f(x, .), ranked by the residual of g.
    std::vector<Complex> fy = f.in_z2(x);
    std::vector<Complex> gy = g.in_z2(x);
    const bool use_f = f.deg2 > 0;
    const auto& poly = use_f ? fy : gy;
    const auto& other = use_f ? g : f;
    std::vector<std::pair<double, Complex>> cand;
    try {
      const auto ys = roots_cp1(poly, RootOptions{1e-6, 1e-9, 500});
      for (const auto& y : ys.chart_zeros)
        for (int k = 0; k < y.multiplicity; ++k) {
          const auto v = other.eval(x, y.point[0]);
          cand.emplace_back(std::abs(v.f) / v.scale, y.point[0]);
        }
    } catch (const std::invalid_argument&) {
      // f(x, .) vanishes identically: the fibre is a common component.
      throw DegeneracyError("equation vanishes identically on the fibre z1 = " + format_double(x.real()) +
                            "+" + format_double(x.imag()) + "i");
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    int need = xr.multiplicity;
    for (std::size_t c = 0; c < cand.size() && need > 0; ++c) {
      Complex xx = x, yy = cand[c].second;
      newton_refine(f, g, xx, yy);
      const double r = joint_residual(f, g, xx, yy);
      if (r > opts.certify_threshold) break;
      bool dup = false;
      for (const auto& p : accepted)
        if (std::abs(p[0] - xx) + std::abs(p[1] - yy) < 1e-9 * std::max(1.0, std::abs(xx) + std::abs(yy)))
          dup = true;
      if (dup) continue;
      accepted.push_back({xx, yy});
      out.chart_zeros.push_back({ZeroPoint{xx, yy}, r, 1});
      ++finite;
      --need;
    }
    if (need > 0) {
      // A resultant root without a finite partner lies at infinity in z2
      // only when both leading coefficients vanish there.
      const double lf = std::abs(fy.back()) / std::max(1e-300, [&] {
        double s = 0;
        for (const auto& c : fy) s += std::abs(c);
        return s;
      }());
      const double lg = std::abs(gy.back()) / std::max(1e-300, [&] {
        double s = 0;
        for (const auto& c : gy) s += std::abs(c);
        return s;
      }());
      if (lf < 1e-8 && lg < 1e-8) continue;
      throw SolverFailure("could not certify a common zero above z1 = " + format_double(x.real()) + "+" +
                          format_double(x.imag()) + "i");
    }
  }
  if (finite > bezout) throw SolverFailure("more certified zeros than the Bezout bound");
  out.at_infinity = bezout - finite;
  return out;
}

int count_in(const ZeroSet& zeros, const ZeroPredicate& region) {
  int n = 0;
  for (const auto& z : zeros.chart_zeros)
    if (region(z.point)) n += z.multiplicity;
  return n;
}

ZeroPredicate whole_chart() {
  return [](const ZeroPoint&) { return true; };
}

ZeroPredicate in_torus(int m, double tol) {
  return [m, tol](const ZeroPoint& p) {
    for (int j = 0; j < m; ++j)
      if (!(std::abs(p[j]) > tol)) return false;
    return true;
  };
}

ZeroPredicate annulus(double lo, double hi) {
  return [lo, hi](const ZeroPoint& p) {
    const double r = std::abs(p[0]);
    return r > 0.0 && r >= lo && r < hi;
  };
}

std::string to_csv(const ZeroSet& zeros) {
  std::ostringstream os;
  if (zeros.m == 1) {
    os << "re,im,residual,multiplicity\n";
    for (const auto& z : zeros.chart_zeros)
      os << format_double(z.point[0].real()) << ',' << format_double(z.point[0].imag()) << ','
         << format_double(z.residual) << ',' << z.multiplicity << '\n';
  } else {
    os << "re1,im1,re2,im2,residual,multiplicity\n";
    for (const auto& z : zeros.chart_zeros)
      os << format_double(z.point[0].real()) << ',' << format_double(z.point[0].imag()) << ','
         << format_double(z.point[1].real()) << ',' << format_double(z.point[1].imag()) << ','
         << format_double(z.residual) << ',' << z.multiplicity << '\n';
  }
  return os.str();
}

}  // namespace zerostat
