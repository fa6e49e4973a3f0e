#include "equifair/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "equifair/error.hpp"

namespace equifair::geometry {

namespace {

Point lerp(Point a, Point b, double t) noexcept { return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

// Constraint n . x <= n . anchor with n normalized.
HalfPlane make_halfplane(double a, double b, Point anchor) {
  const double len = std::hypot(a, b);
  return {a / len, b / len, (a * anchor.x + b * anchor.y) / len};
}

Polygon dedupe(Polygon poly, double eps) {
  Polygon out;
  for (const auto& p : poly)
    if (out.empty() || distance(out.back(), p) > eps) out.push_back(p);
  while (out.size() > 1 && distance(out.front(), out.back()) <= eps) out.pop_back();
  return out;
}

// Parameter of p along segment a->b, with its distance to the supporting line.
std::pair<double, double> segment_coords(Point a, Point b, Point p) noexcept {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  const double off = std::abs(cross(a, b, p)) / std::sqrt(len2);
  return {t, off};
}

}  // namespace

double cross(Point o, Point a, Point b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<std::size_t> convex_hull_indices(std::span<const Point> points) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].x < points[b].x || (points[a].x == points[b].x && points[a].y < points[b].y);
  });
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](std::size_t a, std::size_t b) {
                          return points[a].x == points[b].x && points[a].y == points[b].y;
                        }),
            idx.end());
  if (idx.size() <= 2) return idx;

  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i : idx) {  // lower chain
    while (k >= 2 && cross(points[hull[k - 2]], points[hull[k - 1]], points[i]) <= 0.0) --k;
    hull[k++] = i;
  }
  for (std::size_t j = idx.size() - 1, lower = k + 1; j-- > 0;) {  // upper chain
    const std::size_t i = idx[j];
    while (k >= lower && cross(points[hull[k - 2]], points[hull[k - 1]], points[i]) <= 0.0) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

Polygon convex_hull(std::span<const Point> points) {
  Polygon out;
  for (std::size_t i : convex_hull_indices(points)) out.push_back(points[i]);
  return out;
}

std::vector<HalfPlane> edge_halfplanes(const Polygon& poly) {
  std::vector<HalfPlane> hs;
  if (poly.empty()) return hs;
  if (poly.size() == 1) {
    const Point p = poly[0];
    return {make_halfplane(1, 0, p), make_halfplane(-1, 0, p), make_halfplane(0, 1, p), make_halfplane(0, -1, p)};
  }
  if (poly.size() == 2) {
    const Point p = poly[0], q = poly[1];
    const double dx = q.x - p.x, dy = q.y - p.y;
    return {make_halfplane(dy, -dx, p), make_halfplane(-dy, dx, p), make_halfplane(dx, dy, q),
            make_halfplane(-dx, -dy, p)};
  }
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point p = poly[i], q = poly[(i + 1) % poly.size()];
    if (p.x == q.x && p.y == q.y) continue;
    // interior is to the left of p->q
    hs.push_back(make_halfplane(q.y - p.y, -(q.x - p.x), p));
  }
  return hs;
}

Polygon clip(const Polygon& poly, const HalfPlane& h, double eps) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point cur = poly[i], nxt = poly[(i + 1) % n];
    const double dc = h.excess(cur), dn = h.excess(nxt);
    const bool cur_in = dc <= eps, nxt_in = dn <= eps;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) out.push_back(lerp(cur, nxt, dc / (dc - dn)));
  }
  return dedupe(std::move(out), eps);
}

Polygon intersect(std::span<const Polygon> polys, double eps) {
  if (polys.empty()) return {};
  Polygon result = polys[0];
  for (std::size_t j = 1; j < polys.size() && !result.empty(); ++j)
    for (const auto& h : edge_halfplanes(polys[j])) {
      result = clip(result, h, eps);
      if (result.empty()) break;
    }
  return result;
}

bool contains(const Polygon& poly, Point p, double eps) {
  if (poly.empty()) return false;
  for (const auto& h : edge_halfplanes(poly))
    if (h.excess(p) > eps) return false;
  return true;
}

LinearOptimum minimize_linear(const Polygon& poly, double cx, double cy, double tol) {
  require(!poly.empty(), ErrorCategory::invalid_argument, "minimize_linear over an empty polygon");
  LinearOptimum best{poly[0], cx * poly[0].x + cy * poly[0].y};
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Point p = poly[i];
    const double v = cx * p.x + cy * p.y;
    if (v < best.value - tol) {
      best = {p, v};
    } else if (v <= best.value + tol) {
      if (p.y > best.point.y || (p.y == best.point.y && p.x < best.point.x)) best = {p, v};
    }
  }
  return best;
}

std::vector<std::pair<std::size_t, double>> convex_weights(const Polygon& poly, Point p, double eps) {
  const std::size_t n = poly.size();
  require(n > 0, ErrorCategory::invalid_argument, "convex_weights over an empty polygon");

  for (std::size_t i = 0; i < n; ++i)
    if (distance(poly[i], p) <= eps) return {{i, 1.0}};

  auto on_segment = [&](std::size_t i, std::size_t j) -> std::vector<std::pair<std::size_t, double>> {
    const auto [t, off] = segment_coords(poly[i], poly[j], p);
    if (off > eps || t < 0.0 || t > 1.0) return {};
    return {{i, 1.0 - t}, {j, t}};
  };
  const std::size_t edges = n < 2 ? 0 : (n == 2 ? 1 : n);
  for (std::size_t i = 0; i < edges; ++i) {
    if (auto w = on_segment(i, (i + 1) % n); !w.empty()) return w;
  }

  // fan triangulation from vertex 0
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point a = poly[0], b = poly[i], c = poly[i + 1];
    const double area = cross(a, b, c);
    if (std::abs(area) <= eps * eps) continue;
    double wa = cross(b, c, p) / area;
    double wb = cross(c, a, p) / area;
    double wc = cross(a, b, p) / area;
    if (wa < -eps || wb < -eps || wc < -eps) continue;
    wa = std::max(wa, 0.0);
    wb = std::max(wb, 0.0);
    wc = std::max(wc, 0.0);
    const double s = wa + wb + wc;
    std::vector<std::pair<std::size_t, double>> out;
    if (wa > 0.0) out.emplace_back(0, wa / s);
    if (wb > 0.0) out.emplace_back(i, wb / s);
    if (wc > 0.0) out.emplace_back(i + 1, wc / s);
    return out;
  }
  fail(ErrorCategory::invalid_argument, "point lies outside the polygon");
}

Decomposition cheapest_convex_weights(const Polygon& poly, Point p,
                                      const std::function<double(const Decomposition&)>& cost, std::size_t nearest,
                                      double eps) {
  Decomposition best = convex_weights(poly, p, eps);
  if (best.size() == 1) return best;
  double best_cost = cost(best);

  std::vector<std::size_t> near(poly.size());
  std::iota(near.begin(), near.end(), 0);
  std::stable_sort(near.begin(), near.end(),
                   [&](std::size_t a, std::size_t b) { return distance(poly[a], p) < distance(poly[b], p); });
  if (near.size() > nearest) near.resize(nearest);
  std::sort(near.begin(), near.end());

  auto consider = [&](Decomposition d) {
    const double c = cost(d);
    if (c < best_cost) {
      best_cost = c;
      best = std::move(d);
    }
  };
  for (std::size_t a = 0; a < near.size(); ++a)
    for (std::size_t b = a + 1; b < near.size(); ++b) {
      const std::size_t i = near[a], j = near[b];
      const auto [t, off] = segment_coords(poly[i], poly[j], p);
      if (off <= eps && t > 0.0 && t < 1.0) consider({{i, 1.0 - t}, {j, t}});
      for (std::size_t c = b + 1; c < near.size(); ++c) {
        const std::size_t k = near[c];
        const double area = cross(poly[i], poly[j], poly[k]);
        if (std::abs(area) <= eps * eps) continue;
        const double wi = cross(poly[j], poly[k], p) / area;
        const double wj = cross(poly[k], poly[i], p) / area;
        const double wk = cross(poly[i], poly[j], p) / area;
        if (wi <= 0.0 || wj <= 0.0 || wk <= 0.0) continue;  // boundary cases are covered by pairs
        consider({{i, wi}, {j, wj}, {k, wk}});
      }
    }
  return best;
}

}  // namespace equifair::geometry
