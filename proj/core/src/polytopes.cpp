#include "zerostat/polytopes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zerostat/errors.hpp"

namespace zerostat {

namespace {

long long cross(const IntPoint& o, const IntPoint& a, const IntPoint& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain; collinear points are dropped, output is CCW.
std::vector<IntPoint> convex_hull(std::vector<IntPoint> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<IntPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

}  // namespace

LatticePolytope LatticePolytope::interval(long long a, long long b) {
  if (a < 0 || b < a) throw PolytopeError("interval needs 0 <= a <= b");
  return LatticePolytope(1, {IntPoint{a, 0}, IntPoint{b, 0}});
}

LatticePolytope LatticePolytope::polygon(std::vector<IntPoint> vertices) {
  if (vertices.empty()) throw PolytopeError("polygon needs at least one vertex");
  for (const auto& v : vertices)
    if (v[0] < 0 || v[1] < 0) throw PolytopeError("polytope vertices must be non-negative");
  std::set<IntPoint> distinct(vertices.begin(), vertices.end());
  if (distinct.size() != vertices.size()) throw PolytopeError("repeated polygon vertex");
  if (vertices.size() <= 2) {
    std::sort(vertices.begin(), vertices.end());
    return LatticePolytope(2, std::move(vertices));
  }
  auto hull = convex_hull(vertices);
  if (hull.size() != vertices.size())
    throw PolytopeError("polygon vertices are not in convex position");
  return LatticePolytope(2, std::move(hull));
}

LatticePolytope LatticePolytope::simplex(int m, long long d) {
  if (d < 0) throw PolytopeError("negative simplex dilation");
  if (m == 1) return interval(0, d);
  if (m == 2) {
    if (d == 0) return polygon({{0, 0}});
    return polygon({{0, 0}, {d, 0}, {0, d}});
  }
  throw PolytopeError("polytopes are supported for m = 1, 2");
}

LatticePolytope LatticePolytope::parse(std::string_view literal) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(literal);
  } catch (const nlohmann::json::exception& e) {
    throw PolytopeError("malformed polytope literal: " + std::string(literal));
  }
  if (!j.is_array() || j.empty()) throw PolytopeError("polytope literal must be a list");
  auto as_int = [](const nlohmann::json& v) -> long long {
    if (!v.is_number_integer()) throw PolytopeError("polytope coordinates must be integers");
    return v.get<long long>();
  };
  if (!j[0].is_array()) {
    if (j.size() != 2) throw PolytopeError("interval literal must be [a,b]");
    return interval(as_int(j[0]), as_int(j[1]));
  }
  std::vector<IntPoint> vs;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2) throw PolytopeError("polygon vertices must be [x,y]");
    vs.push_back({as_int(v[0]), as_int(v[1])});
  }
  return polygon(std::move(vs));
}

long long LatticePolytope::degree() const {
  long long d = 0;
  for (const auto& v : vertices_) d = std::max(d, m_ == 1 ? v[0] : v[0] + v[1]);
  return d;
}

bool LatticePolytope::contains(const MonomialIndex& alpha) const {
  if (m_ == 1) return alpha[0] >= vertices_[0][0] && alpha[0] <= vertices_[1][0];
  const IntPoint p{alpha[0], alpha[1]};
  const auto n = vertices_.size();
  if (n == 1) return p == vertices_[0];
  if (n == 2) {
    const auto& a = vertices_[0];
    const auto& b = vertices_[1];
    return cross(a, b, p) == 0 && p[0] >= std::min(a[0], b[0]) && p[0] <= std::max(a[0], b[0]) &&
           p[1] >= std::min(a[1], b[1]) && p[1] <= std::max(a[1], b[1]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (cross(vertices_[i], vertices_[(i + 1) % n], p) < 0) return false;
  return true;
}

bool LatticePolytope::is_simple() const {
  if (m_ == 1) return vertices_[0][0] < vertices_[1][0];
  return vertices_.size() >= 3;
}

std::string LatticePolytope::to_literal() const {
  std::ostringstream os;
  if (m_ == 1) {
    os << '[' << vertices_[0][0] << ',' << vertices_[1][0] << ']';
    return os.str();
  }
  os << '[';
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    os << (i ? "," : "") << '[' << vertices_[i][0] << ',' << vertices_[i][1] << ']';
  os << ']';
  return os.str();
}

LatticePolytope dilate(const LatticePolytope& P, long long N) {
  if (N < 0) throw PolytopeError("negative dilation");
  if (P.dim() == 1) return LatticePolytope::interval(P.vertices()[0][0] * N, P.vertices()[1][0] * N);
  if (N == 0) return LatticePolytope::polygon({{0, 0}});
  std::vector<IntPoint> vs;
  for (const auto& v : P.vertices()) vs.push_back({v[0] * N, v[1] * N});
  return LatticePolytope::polygon(std::move(vs));
}

std::vector<MonomialIndex> lattice_points(const LatticePolytope& P) {
  std::vector<MonomialIndex> out;
  if (P.dim() == 1) {
    for (long long a = P.vertices()[0][0]; a <= P.vertices()[1][0]; ++a) {
      MonomialIndex idx(1);
      idx[0] = static_cast<int>(a);
      out.push_back(idx);
    }
    return out;
  }
  long long xlo = std::numeric_limits<long long>::max(), ylo = xlo, xhi = 0, yhi = 0;
  for (const auto& v : P.vertices()) {
    xlo = std::min(xlo, v[0]);
    xhi = std::max(xhi, v[0]);
    ylo = std::min(ylo, v[1]);
    yhi = std::max(yhi, v[1]);
  }
  for (long long x = xlo; x <= xhi; ++x)
    for (long long y = ylo; y <= yhi; ++y) {
      MonomialIndex idx(2);
      idx[0] = static_cast<int>(x);
      idx[1] = static_cast<int>(y);
      if (P.contains(idx)) out.push_back(idx);
    }
  std::sort(out.begin(), out.end(), GradedLexLess{});
  return out;
}

Rational volume(const LatticePolytope& P) {
  const auto& v = P.vertices();
  if (P.dim() == 1) return Rational(v[1][0] - v[0][0]);
  if (v.size() < 3) return Rational(0);
  long long twice = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return Rational(twice, 2);
}

std::vector<double> moment_map(std::span<const std::complex<double>> z) {
  double total = 1.0;
  for (const auto& zj : z) total += std::norm(zj);
  std::vector<double> mu(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) mu[j] = std::norm(z[j]) / total;
  return mu;
}

std::string to_string(Region r) {
  switch (r) {
    case Region::Allowed:
      return "allowed";
    case Region::Forbidden:
      return "forbidden";
    case Region::Boundary:
      return "boundary";
  }
  return "boundary";
}

double scaled_polytope_margin(const LatticePolytope& P, double p, std::span<const double> x) {
  const auto& v = P.vertices();
  if (P.dim() == 1) {
    const double lo = double(v[0][0]) / p, hi = double(v[1][0]) / p;
    return std::min(x[0] - lo, hi - x[0]);
  }
  const double px = x[0], py = x[1];
  const std::size_t n = v.size();
  auto vx = [&](std::size_t i) { return double(v[i % n][0]) / p; };
  auto vy = [&](std::size_t i) { return double(v[i % n][1]) / p; };
  if (n == 1) return -std::hypot(px - vx(0), py - vy(0));
  if (n == 2) return -segment_distance(px, py, vx(0), vy(0), vx(1), vy(1));
  bool inside = true;
  double inner = std::numeric_limits<double>::infinity();
  double outer = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = vx(i), ay = vy(i), bx = vx(i + 1), by = vy(i + 1);
    const double len = std::hypot(bx - ax, by - ay);
    const double signed_dist = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) / len;
    if (signed_dist < 0) inside = false;
    inner = std::min(inner, signed_dist);
    outer = std::min(outer, segment_distance(px, py, ax, ay, bx, by));
  }
  return inside ? inner : -outer;
}

RegionLabel classify_region(const LatticePolytope& P, double p,
                            std::span<const std::complex<double>> z, double eps) {
  if (!(p > 0)) throw PolytopeError("degree scale p must be positive");
  if (static_cast<int>(z.size()) != P.dim()) throw PolytopeError("point and polytope dimensions differ");
  const auto mu = moment_map(z);
  RegionLabel label;
  label.margin = scaled_polytope_margin(P, p, mu);
  if (label.margin >= eps)
    label.region = Region::Allowed;
  else if (label.margin <= -eps)
    label.region = Region::Forbidden;
  else
    label.region = Region::Boundary;
  return label;
}

}  // namespace zerostat
