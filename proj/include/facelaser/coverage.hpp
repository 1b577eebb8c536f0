#pragma once

// Shot statistics: spacing along strips and the fraction of an operable
// region covered by the union of shot disks.

#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/kdtree.hpp"
#include "facelaser/polygon.hpp"
#include "facelaser/simulator.hpp"

namespace facelaser {

struct CoverageReport {
  std::size_t n_shots = 0;
  double path_length = 0.0;       // m
  double mean_spacing = 0.0;      // m
  double spacing_variance = 0.0;  // m^2, population variance
  std::size_t n_spacings = 0;
  double coverage = 0.0;          // fraction in [0, 1]
  double operable_area = 0.0;     // m^2
};

/// Polygon in the (x, y) plane of `frame`; shots are projected onto it.
struct PlanarRegion {
  RigidTransform frame;
  std::vector<Pixel> polygon;  // (u, v) = plane (x, y), metres
};

inline PlanarRegion rectangle_region(const RigidTransform& frame, double x0, double y0, double x1, double y1) {
  return {frame, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

/// Rectangle spanned by the first and last shot, extended by half a
/// diameter at both ends and one diameter wide. `normal` fixes the plane.
inline PlanarRegion strip_region(const ShotLog& log, double diameter, const Vec3& normal = Vec3::UnitZ()) {
  if (log.shots.empty()) throw Error(ErrorCode::EmptyLog, "no shots");
  const Vec3 a = log.shots.front().psi.position;
  const Vec3 b = log.shots.back().psi.position;
  Vec3 x = b - a;
  x = x - x.dot(normal) * normal;
  if (x.norm() < 1e-12) x = normal.unitOrthogonal();
  x.normalize();
  const Vec3 z = normal.normalized();
  const Vec3 y = z.cross(x);
  RigidTransform frame;
  frame.rotation.col(0) = x;
  frame.rotation.col(1) = y;
  frame.rotation.col(2) = z;
  frame.translation = a;
  const double len = (b - a).dot(x);
  const double r = 0.5 * diameter;
  return rectangle_region(frame, -r, -r, len + r, r);
}

struct SpacingStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

/// Distances between consecutive shots of the same segment and strip.
inline SpacingStats spacing_stats(const ShotLog& log) {
  std::vector<double> d;
  for (std::size_t i = 1; i < log.shots.size(); ++i) {
    const auto& a = log.shots[i - 1];
    const auto& b = log.shots[i];
    if (a.strip != b.strip || a.segment != b.segment) continue;
    d.push_back((b.psi.position - a.psi.position).norm());
  }
  SpacingStats s;
  s.count = d.size();
  if (d.empty()) return s;
  for (double v : d) s.mean += v;
  s.mean /= static_cast<double>(d.size());
  for (double v : d) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(d.size());
  return s;
}

namespace coverage_detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class DiskGrid {
 public:
  DiskGrid(std::vector<Pixel> centers, double diameter) : centers_(std::move(centers)), cell_(diameter), r2_(0.25 * diameter * diameter) {
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      grid_[key(cell_of(centers_[i].u), cell_of(centers_[i].v))].push_back(i);
    }
  }

  [[nodiscard]] bool covers(const Pixel& p) const {
    const std::int64_t cx = cell_of(p.u);
    const std::int64_t cy = cell_of(p.v);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = grid_.find(key(cx + dx, cy + dy));
        if (it == grid_.end()) continue;
        for (std::size_t i : it->second) {
          const double du = p.u - centers_[i].u;
          const double dv = p.v - centers_[i].v;
          if (du * du + dv * dv <= r2_) return true;
        }
      }
    }
    return false;
  }

 private:
  [[nodiscard]] std::int64_t cell_of(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }
  static std::uint64_t key(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) << 32) ^ (static_cast<std::uint64_t>(b) & 0xffffffffULL);
  }

  std::vector<Pixel> centers_;
  double cell_;
  double r2_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
};

inline void fill_log_stats(CoverageReport& r, const ShotLog& log) {
  const SpacingStats s = spacing_stats(log);
  r.n_shots = log.shots.size();
  r.path_length = log.path_length;
  r.mean_spacing = s.mean;
  r.spacing_variance = s.variance;
  r.n_spacings = s.count;
}

}  // namespace coverage_detail

/// Monte Carlo coverage of a planar polygon: uniform samples over its
/// bounding box, kept when inside, covered when within half a diameter of
/// a projected shot centre.
inline CoverageReport coverage_metrics(const ShotLog& log, const PlanarRegion& region, double diameter,
                                       std::size_t samples = 1000000, std::uint64_t seed = 1) {
  if (log.shots.empty()) throw Error(ErrorCode::EmptyLog, "coverage of an empty shot log");
  if (region.polygon.size() < 3) throw Error(ErrorCode::InvalidParam, "region polygon needs 3 vertices");
  if (!(diameter > 0.0) || samples == 0) throw Error(ErrorCode::InvalidParam, "bad coverage parameters");

  CoverageReport r;
  coverage_detail::fill_log_stats(r, log);
  r.operable_area = polygon_area(region.polygon);

  const RigidTransform to_plane = invert(region.frame);
  std::vector<Pixel> centers;
  centers.reserve(log.shots.size());
  for (const auto& s : log.shots) {
    const Vec3 q = to_plane.apply(s.psi.position);
    centers.push_back({q.x(), q.y()});
  }
  const coverage_detail::DiskGrid grid(std::move(centers), diameter);

  double u0 = region.polygon.front().u, u1 = u0, v0 = region.polygon.front().v, v1 = v0;
  for (const auto& p : region.polygon) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  std::mt19937_64 rng(seed);
  std::size_t inside = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Pixel p{u0 + (u1 - u0) * coverage_detail::unit(rng), v0 + (v1 - v0) * coverage_detail::unit(rng)};
    if (!point_in_polygon(p, region.polygon)) continue;
    ++inside;
    if (grid.covers(p)) ++covered;
  }
  r.coverage = inside == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(inside);
  return r;
}

/// Coverage of a region given as a surface cloud: the fraction of its points
/// (all of them, or `samples` drawn with replacement when the cloud is
/// larger) lying within half a diameter of a shot centre. The operable area
/// is the point count times `cell_area`.
inline CoverageReport coverage_metrics(const ShotLog& log, const PointCloud& region, double diameter,
                                       double cell_area, std::size_t samples = 1000000, std::uint64_t seed = 1) {
  if (log.shots.empty()) throw Error(ErrorCode::EmptyLog, "coverage of an empty shot log");
  if (region.empty()) throw Error(ErrorCode::EmptyCloud, "empty operable region");
  if (!(diameter > 0.0) || !(cell_area > 0.0) || samples == 0) {
    throw Error(ErrorCode::InvalidParam, "bad coverage parameters");
  }
  CoverageReport r;
  coverage_detail::fill_log_stats(r, log);
  r.operable_area = static_cast<double>(region.size()) * cell_area;

  std::vector<Vec3> centers;
  centers.reserve(log.shots.size());
  for (const auto& s : log.shots) centers.push_back(s.psi.position);
  const KdTree tree(centers);
  const double r2 = 0.25 * diameter * diameter;
  auto hit = [&](const Vec3& p) { return tree.nearest(p).second <= r2; };

  std::size_t covered = 0;
  std::size_t n = 0;
  if (region.size() <= samples) {
    for (const auto& p : region.points) covered += hit(p.position) ? 1 : 0;
    n = region.size();
  } else {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto k = static_cast<std::size_t>(coverage_detail::unit(rng) * static_cast<double>(region.size()));
      covered += hit(region.points[std::min(k, region.size() - 1)].position) ? 1 : 0;
    }
    n = samples;
  }
  r.coverage = static_cast<double>(covered) / static_cast<double>(n);
  return r;
}

}  // namespace facelaser
