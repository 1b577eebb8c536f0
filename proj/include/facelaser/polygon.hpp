#pragma once

// Planar polygon utilities on pixel coordinates.

#include <algorithm>
#include <cmath>
#include <vector>

#include "facelaser/geometry.hpp"

namespace facelaser {

namespace poly_detail {

inline double cross(const Pixel& o, const Pixel& a, const Pixel& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

inline bool on_segment(const Pixel& p, const Pixel& a, const Pixel& b) {
  return std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) && std::min(a.v, b.v) <= p.v &&
         p.v <= std::max(a.v, b.v);
}

inline bool segments_intersect(const Pixel& a, const Pixel& b, const Pixel& c, const Pixel& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

inline double signed_area(const std::vector<Pixel>& poly) {
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    a += poly[j].u * poly[i].v - poly[i].u * poly[j].v;
  }
  return 0.5 * a;
}

inline std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  if (pts.size() < 3) return pts;
  std::vector<Pixel> hull(2 * pts.size());
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

}  // namespace poly_detail

/// Simple = at least 3 vertices, non-zero area, and no two non-adjacent
/// edges touching.
inline bool is_simple_polygon(const std::vector<Pixel>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (const auto& p : poly) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) return false;
  }
  if (std::abs(poly_detail::signed_area(poly)) < 1e-9) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel& a = poly[i];
    const Pixel& b = poly[(i + 1) % n];
    if (a.u == b.u && a.v == b.v) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (poly_detail::segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Even-odd ray casting towards +u. An edge counts when it straddles the
/// horizontal line through p half-openly, so points on the minimum-u and
/// minimum-v borders are inside and those on the maximum borders outside;
/// two polygons sharing an edge never both claim a point on it.
inline bool point_in_polygon(const Pixel& p, const std::vector<Pixel>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Pixel& a = poly[i];
    const Pixel& b = poly[j];
    if ((a.v > p.v) != (b.v > p.v)) {
      const double u_cross = a.u + (p.v - a.v) * (b.u - a.u) / (b.v - a.v);
      if (p.u < u_cross) inside = !inside;
    }
  }
  return inside;
}

/// Absolute area of a simple polygon.
inline double polygon_area(const std::vector<Pixel>& poly) {
  return poly.size() < 3 ? 0.0 : std::abs(poly_detail::signed_area(poly));
}

}  // namespace facelaser
