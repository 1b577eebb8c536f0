#pragma once

// S-shaped coverage paths over a region cloud: strips binned across the
// sweep direction, a patch stencil averaged along each strip, and pose
// commands derived from the averaged normals.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"

namespace facelaser {

enum class StripOrientation {
  automatic,   // wider segment -> horizontal strips, taller -> vertical
  horizontal,  // strips binned along y, swept along x
  vertical,    // strips binned along x, swept along y
};

/// How the strip width responds to the strip's tilt o about the sweep axis.
enum class ObliquityModel {
  surface_pitch,  // d_s = d cos(o): the row pitch measured on the surface is d
  as_printed,     // d_s = d / cos(o)
  none,           // d_s = d
};

struct PlannerConfig {
  double laser_diameter = 0.004;  // m
  double pulse_rate = 5.0;        // Hz
  StripOrientation orientation = StripOrientation::automatic;
  ObliquityModel obliquity = ObliquityModel::surface_pitch;
  double max_obliquity = deg_to_rad(80.0);

  void validate() const {
    if (!(laser_diameter > 0.0) || !std::isfinite(laser_diameter)) {
      throw Error(ErrorCode::InvalidParam, "laser diameter must be positive");
    }
    if (!(pulse_rate > 0.0) || !std::isfinite(pulse_rate)) {
      throw Error(ErrorCode::InvalidParam, "pulse rate must be positive");
    }
    if (!(max_obliquity >= 0.0 && max_obliquity < kPi / 2.0)) {
      throw Error(ErrorCode::InvalidParam, "max obliquity must lie in [0, pi/2)");
    }
  }
};

struct Strip {
  int index = 0;
  double lo = 0.0;  // bin-axis range [lo, hi)
  double hi = 0.0;
  double obliquity = 0.0;
  Vec3 normal = Vec3::UnitZ();  // normalized mean member normal
  PointCloud points;
};

struct PathPoint {
  Vec3 chi = Vec3::Zero();
  Vec3 eta = Vec3::UnitZ();
  int strip = 0;
};

struct SegmentPath {
  std::string label;
  std::vector<PathPoint> points;
  StripOrientation orientation = StripOrientation::horizontal;
  std::vector<double> strip_widths;  // d_s per strip, in strip order
};

/// Bin and sweep axes (0 = x, 1 = y) for a resolved orientation.
inline std::pair<int, int> strip_axes(StripOrientation o) {
  return o == StripOrientation::vertical ? std::pair{0, 1} : std::pair{1, 0};
}

/// Tilt of a strip about `hinge` (the sweep axis, camera x for horizontal
/// strips): the angle between the normal's projection onto the plane
/// orthogonal to the hinge and the camera axis. 0 when the normal is along
/// the camera axis or along the hinge.
inline double strip_obliquity(const Vec3& eta_s, const Vec3& gamma_c, const Vec3& hinge = Vec3::UnitX()) {
  const Vec3 g = gamma_c.normalized();
  const Vec3 eta = eta_s.normalized();
  if ((eta - eta.dot(g) * g).norm() < 1e-9) return 0.0;
  Vec3 h = hinge - hinge.dot(g) * g;
  if (h.norm() < 1e-12) return 0.0;
  h.normalize();
  const Vec3 p = eta - eta.dot(h) * h;
  if (p.norm() < 1e-12) return 0.0;
  const double c = std::clamp(std::abs(p.dot(g)) / p.norm(), 0.0, 1.0);
  return std::min(std::acos(c), std::nextafter(kPi / 2.0, 0.0));
}

inline double strip_width(double diameter, double obliquity, ObliquityModel model) {
  switch (model) {
    case ObliquityModel::surface_pitch: return diameter * std::cos(obliquity);
    case ObliquityModel::as_printed: return diameter / std::cos(obliquity);
    case ObliquityModel::none: return diameter;
  }
  return diameter;
}

inline double max_speed(const PlannerConfig& cfg) { return cfg.laser_diameter * cfg.pulse_rate; }

inline StripOrientation resolve_orientation(const PointCloud& segment, StripOrientation requested) {
  if (requested != StripOrientation::automatic) return requested;
  const auto [lo, hi] = segment.bounds();
  const Vec3 ext = hi - lo;
  return ext.x() >= ext.y() ? StripOrientation::horizontal : StripOrientation::vertical;
}

namespace plan_detail {

inline Vec3 mean_normal(const PointCloud& cloud, const std::vector<std::size_t>& ids) {
  Vec3 n = Vec3::Zero();
  for (std::size_t i : ids) n += cloud.points[i].normal;
  return n.norm() > 1e-12 ? Vec3(n.normalized()) : Vec3::UnitZ();
}

}  // namespace plan_detail

/// Adaptive binning along the bin axis. Each strip is seeded as
/// [lo, lo + d), its obliquity taken from the seed members' mean normal,
/// and the range then re-cut to [lo, lo + d_s). The next strip starts at
/// the previous upper bound. Empty ranges are skipped.
inline std::vector<Strip> bin_strips(const PointCloud& segment, const PlannerConfig& cfg, const Vec3& camera_axis,
                                     StripOrientation orientation) {
  cfg.validate();
  if (segment.empty()) throw Error(ErrorCode::EmptySegment, "cannot bin an empty segment");
  const auto [bin_axis, sweep_axis] = strip_axes(resolve_orientation(segment, orientation));
  const double d = cfg.laser_diameter;
  const Vec3 hinge = Vec3::Unit(sweep_axis);

  std::vector<std::size_t> order(segment.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto coord = [&](std::size_t i) { return segment.points[i].position[bin_axis]; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coord(a) < coord(b); });

  std::vector<Strip> strips;
  std::size_t next = 0;
  double lo = coord(order.front());
  while (next < order.size()) {
    const double first = coord(order[next]);
    if (first >= lo + d) lo += d * std::floor((first - lo) / d);

    std::vector<std::size_t> seed;
    for (std::size_t k = next; k < order.size() && coord(order[k]) < lo + d; ++k) seed.push_back(order[k]);
    double oblique = 0.0;
    if (segment.has_normals && !seed.empty()) {
      oblique = std::min(strip_obliquity(plan_detail::mean_normal(segment, seed), camera_axis, hinge),
                         cfg.max_obliquity);
    }
    const double hi = lo + strip_width(d, oblique, cfg.obliquity);

    Strip s;
    s.lo = lo;
    s.hi = hi;
    s.obliquity = oblique;
    s.points.frame = segment.frame;
    s.points.has_normals = segment.has_normals;
    s.points.has_colors = segment.has_colors;
    std::vector<std::size_t> members;
    while (next < order.size() && coord(order[next]) < hi) members.push_back(order[next++]);
    if (!members.empty()) {
      std::sort(members.begin(), members.end());
      for (std::size_t i : members) s.points.points.push_back(segment.points[i]);
      s.normal = segment.has_normals ? plan_detail::mean_normal(segment, members) : Vec3::UnitZ();
      s.index = static_cast<int>(strips.size());
      strips.push_back(std::move(s));
    }
    lo = hi;
  }
  return strips;
}

inline std::vector<Strip> bin_strips(const PointCloud& segment, const PlannerConfig& cfg, const Vec3& camera_axis) {
  return bin_strips(segment, cfg, camera_axis, cfg.orientation);
}

/// Patch stencil swept along one strip. The sweep extent is split into
/// n = max(1, round(extent / d)) equal cells anchored at the minimum, so
/// every strip point belongs to exactly one cell; each non-empty cell
/// yields its mean position and normalized mean normal.
inline std::vector<PathPoint> sweep_patch(const Strip& strip, const PlannerConfig& cfg, int direction,
                                          int sweep_axis = 0) {
  std::vector<PathPoint> out;
  if (strip.points.empty()) return out;
  const auto& pts = strip.points.points;
  double s_min = pts.front().position[sweep_axis];
  double s_max = s_min;
  for (const auto& p : pts) {
    s_min = std::min(s_min, p.position[sweep_axis]);
    s_max = std::max(s_max, p.position[sweep_axis]);
  }
  const double extent = s_max - s_min;
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::round(extent / cfg.laser_diameter)));
  const double width = extent / static_cast<double>(cells);

  std::vector<Vec3> pos_sum(cells, Vec3::Zero());
  std::vector<Vec3> nrm_sum(cells, Vec3::Zero());
  std::vector<std::size_t> count(cells, 0);
  for (const auto& p : pts) {
    std::size_t c = 0;
    if (width > 0.0) {
      c = static_cast<std::size_t>(std::floor((p.position[sweep_axis] - s_min) / width));
      c = std::min(c, cells - 1);
    }
    pos_sum[c] += p.position;
    nrm_sum[c] += p.normal;
    ++count[c];
  }
  for (std::size_t k = 0; k < cells; ++k) {
    const std::size_t c = direction >= 0 ? k : cells - 1 - k;
    if (count[c] == 0) continue;
    PathPoint pp;
    pp.chi = pos_sum[c] / static_cast<double>(count[c]);
    pp.eta = strip.points.has_normals && nrm_sum[c].norm() > 1e-12 ? Vec3(nrm_sum[c].normalized()) : strip.normal;
    pp.strip = strip.index;
    out.push_back(pp);
  }
  return out;
}

/// One S-shaped path over a segment. Normals are flipped into the camera
/// axis hemisphere so that the tool approach axis points into the surface.
inline SegmentPath plan_segment(const PointCloud& segment, const PlannerConfig& cfg, const Vec3& camera_axis,
                                const std::string& label = {}) {
  cfg.validate();
  if (segment.empty()) throw Error(ErrorCode::EmptySegment, "cannot plan an empty segment");
  SegmentPath path;
  path.label = label;
  path.orientation = resolve_orientation(segment, cfg.orientation);
  const int sweep_axis = strip_axes(path.orientation).second;

  const auto strips = bin_strips(segment, cfg, camera_axis, path.orientation);
  for (const auto& s : strips) {
    path.strip_widths.push_back(s.hi - s.lo);
    for (PathPoint p : sweep_patch(s, cfg, s.index % 2 == 0 ? 1 : -1, sweep_axis)) {
      if (p.eta.dot(camera_axis) < 0.0) p.eta = -p.eta;
      path.points.push_back(p);
    }
  }
  return path;
}

/// Pose commands [chi; nu] with the tool z axis along each path normal.
inline std::vector<PoseVector6> path_to_poses(const SegmentPath& path,
                                              NormalFallback fallback = NormalFallback::reject) {
  std::vector<PoseVector6> out;
  out.reserve(path.points.size());
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const auto& p = path.points[i];
    Mat3 r;
    try {
      r = rotation_from_normal(p.eta, fallback);
    } catch (const Error& e) {
      throw Error(e.code(), "path point " + std::to_string(i) + ": " + e.what());
    }
    out.push_back({p.chi, rotation_to_axis_angle(r)});
  }
  return out;
}

}  // namespace facelaser
