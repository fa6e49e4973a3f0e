#pragma once

// Small exact-ish 2D toolkit for the equalized-odds programs: convex hulls of
// ROC points, convex polygon intersection by half-plane clipping, linear
// minimization over a polygon, and convex decomposition of a point.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace equifair::geometry {

struct Point {
  double x = 0.0;  // fpr
  double y = 0.0;  // tpr
};

// Counter-clockwise, no repeated closing vertex. May be degenerate (a
// segment or a point) when the region has no area.
using Polygon = std::vector<Point>;

// a*x + b*y <= c, with (a, b) unit length.
struct HalfPlane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double excess(Point p) const noexcept { return a * p.x + b * p.y - c; }
};

inline constexpr double kEps = 1e-12;

double cross(Point o, Point a, Point b) noexcept;

// Indices of the hull vertices of `points`, counter-clockwise starting from the
// lowest-x (then lowest-y) point. Collinear points are dropped.
std::vector<std::size_t> convex_hull_indices(std::span<const Point> points);
Polygon convex_hull(std::span<const Point> points);

// Half-planes whose intersection is the polygon. A segment yields the two
// opposite half-planes of its supporting line plus two end caps.
std::vector<HalfPlane> edge_halfplanes(const Polygon& poly);

Polygon clip(const Polygon& poly, const HalfPlane& h, double eps = kEps);

// Empty result means empty intersection.
Polygon intersect(std::span<const Polygon> polys, double eps = kEps);

bool contains(const Polygon& poly, Point p, double eps = kEps);

struct LinearOptimum {
  Point point;
  double value = 0.0;
};

// Minimizes cx*x + cy*y over the vertices. Values within `tol` are ties,
// broken by larger y, then smaller x.
LinearOptimum minimize_linear(const Polygon& poly, double cx, double cy, double tol = 1e-12);

// Writes `p` as a convex combination of at most three polygon vertices.
// Returns (vertex index, weight) pairs with positive weights summing to 1.
// Throws if p is outside the polygon by more than eps.
std::vector<std::pair<std::size_t, double>> convex_weights(const Polygon& poly, Point p, double eps = 1e-10);

using Decomposition = std::vector<std::pair<std::size_t, double>>;

// Like convex_weights, but searches single vertices, vertex pairs and vertex
// triangles (over the `nearest` vertices closest to p) for the decomposition
// with the lowest cost. Falls back to convex_weights when nothing else fits.
Decomposition cheapest_convex_weights(const Polygon& poly, Point p,
                                      const std::function<double(const Decomposition&)>& cost,
                                      std::size_t nearest = 48, double eps = 1e-10);

}  // namespace equifair::geometry
