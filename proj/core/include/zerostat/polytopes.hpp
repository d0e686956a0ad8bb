#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "zerostat/monomial.hpp"

namespace zerostat {

using Rational = boost::rational<long long>;
using IntPoint = std::array<long long, 2>;

/// Integral convex polytope in the non-negative orthant, m = 1 or 2.
///
/// For m = 1 the vertices are the endpoints a <= b (second coordinate unused).
/// For m = 2 the vertices are the extreme points in counterclockwise order;
/// one or two vertices describe a degenerate point or segment.
class LatticePolytope {
 public:
  static LatticePolytope interval(long long a, long long b);
  /// Throws PolytopeError if a coordinate is negative or the points are not
  /// in convex position. Either orientation is accepted.
  static LatticePolytope polygon(std::vector<IntPoint> vertices);
  /// Unit simplex of dimension m dilated by d.
  static LatticePolytope simplex(int m, long long d);
  /// Literal syntax: "[a,b]" for m = 1, "[[x1,y1],[x2,y2],...]" for m = 2.
  static LatticePolytope parse(std::string_view literal);

  int dim() const { return m_; }
  const std::vector<IntPoint>& vertices() const { return vertices_; }

  /// Smallest d with the polytope inside the d-dilated unit simplex.
  long long degree() const;
  bool contains(const MonomialIndex& alpha) const;
  /// For m = 2 every vertex of a convex polygon meets exactly two edges;
  /// degenerate polygons (point, segment) are not simple.
  bool is_simple() const;

  std::string to_literal() const;

  bool operator==(const LatticePolytope&) const = default;

 private:
  LatticePolytope(int m, std::vector<IntPoint> v) : m_(m), vertices_(std::move(v)) {}

  int m_ = 1;
  std::vector<IntPoint> vertices_;
};

LatticePolytope dilate(const LatticePolytope& P, long long N);

/// All integer points of P in graded lexicographic order.
std::vector<MonomialIndex> lattice_points(const LatticePolytope& P);

/// Euclidean m-volume, exact.
Rational volume(const LatticePolytope& P);

/// Moment map of CP^m restricted to the chart: z_j -> |z_j|^2 / (1 + |z|^2).
std::vector<double> moment_map(std::span<const std::complex<double>> z);

enum class Region { Allowed, Forbidden, Boundary };

struct RegionLabel {
  Region region = Region::Boundary;
  /// Signed distance of the moment-map image to the boundary of (1/p) P,
  /// positive inside.
  double margin = 0.0;
};

inline constexpr double kDefaultRegionMargin = 1e-3;

std::string to_string(Region r);

/// Signed distance of a point x (simplex coordinates) to the boundary of (1/p) P.
double scaled_polytope_margin(const LatticePolytope& P, double p, std::span<const double> x);

RegionLabel classify_region(const LatticePolytope& P, double p,
                            std::span<const std::complex<double>> z,
                            double eps = kDefaultRegionMargin);

}  // namespace zerostat
