#pragma once

// Deterministic synthetic inputs: ellipsoid heads, planar patches and a
// frontal 68-point landmark layout.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/pathplan.hpp"
#include "facelaser/segmentation.hpp"

namespace facelaser {

/// Fibonacci-lattice samples on an ellipsoid with outward analytic normals.
inline PointCloud ellipsoid_surface(const Vec3& semi_axes, const Vec3& center, std::size_t n) {
  PointCloud c;
  c.has_normals = true;
  c.points.reserve(n);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = golden * static_cast<double>(i);
    const Vec3 s(r * std::cos(a), y, r * std::sin(a));
    SurfacePoint p;
    p.position = center + semi_axes.cwiseProduct(s);
    p.normal = s.cwiseQuotient(semi_axes).normalized();
    p.color = {200, 160, 140};
    c.points.push_back(p);
  }
  c.has_colors = true;
  return c;
}

/// Points whose normal faces `viewpoint`.
inline PointCloud visible_from(const PointCloud& cloud, const Vec3& viewpoint) {
  PointCloud out = cloud;
  out.points.clear();
  for (const auto& p : cloud.points) {
    if (p.normal.dot(viewpoint - p.position) > 0.0) out.points.push_back(p);
  }
  return out;
}

inline constexpr double kHeadDepth = 0.5;

/// Front half of a 150 x 200 x 180 mm ellipsoid half a metre in front of a
/// camera at the origin looking along +z.
inline PointCloud synthetic_head(std::size_t n = 40000) {
  return visible_from(ellipsoid_surface(Vec3(0.075, 0.10, 0.09), Vec3(0.0, 0.0, kHeadDepth), n), Vec3::Zero());
}

inline CameraIntrinsics synthetic_camera() { return {600.0, 600.0, 320.0, 240.0, 640, 480}; }

/// nx x ny grid with the given spacing in the (x, y) plane of `pose`, normals
/// along the pose's -z axis (towards a camera at the origin for pose = I).
inline PointCloud planar_grid(std::size_t nx, std::size_t ny, double spacing,
                              const RigidTransform& pose = RigidTransform::identity()) {
  PointCloud c;
  c.has_normals = true;
  const Vec3 n = -pose.rotation.col(2);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      SurfacePoint p;
      p.position = pose.apply(Vec3(static_cast<double>(i) * spacing, static_cast<double>(j) * spacing, 0.0));
      p.normal = n;
      c.points.push_back(p);
    }
  }
  return c;
}

/// Frontal landmark layout in unit face coordinates, x to the image right
/// and y downwards, mirror-symmetric about x = 0.5.
inline std::array<Pixel, 68> canonical_landmark_layout() {
  std::array<Pixel, 68> p{};
  std::array<bool, 68> set{};
  auto put = [&](int i, double u, double v) {
    p[i] = {u, v};
    set[i] = true;
  };
  for (int i = 0; i <= 16; ++i) {
    const double a = kPi * i / 16.0;
    put(i, 0.5 - 0.42 * std::cos(a), 0.40 + 0.50 * std::sin(a));
  }
  put(8, 0.5, 0.90);
  put(17, 0.17, 0.31);
  put(18, 0.23, 0.27);
  put(19, 0.30, 0.26);
  put(20, 0.37, 0.27);
  put(21, 0.44, 0.29);
  put(27, 0.5, 0.36);
  put(28, 0.5, 0.43);
  put(29, 0.5, 0.50);
  put(30, 0.5, 0.57);
  put(31, 0.42, 0.61);
  put(32, 0.46, 0.625);
  put(33, 0.5, 0.635);
  put(36, 0.22, 0.38);
  put(37, 0.27, 0.355);
  put(38, 0.33, 0.355);
  put(39, 0.39, 0.385);
  put(40, 0.33, 0.40);
  put(41, 0.27, 0.40);
  put(48, 0.35, 0.73);
  put(49, 0.40, 0.70);
  put(50, 0.46, 0.685);
  put(51, 0.5, 0.69);
  put(57, 0.5, 0.795);
  put(58, 0.45, 0.79);
  put(59, 0.40, 0.77);
  put(60, 0.37, 0.73);
  put(61, 0.45, 0.715);
  put(62, 0.5, 0.718);
  put(66, 0.5, 0.752);
  put(67, 0.45, 0.75);
  for (int i = 0; i < 68; ++i) {
    if (set[i]) continue;
    const Pixel& m = p[mirrored_landmark(i)];
    p[i] = {1.0 - m.u, m.v};
  }
  return p;
}

/// Canonical layout scaled onto the image: u = u0 + (x - 0.5) su, likewise v.
/// The defaults fit the synthetic head seen by the synthetic camera.
inline FaceLandmarks canonical_landmarks(double u0 = 320.0, double su = 170.0, double v0 = 240.0, double sv = 230.0,
                                         int width = 640, int height = 480) {
  FaceLandmarks lm;
  lm.width = width;
  lm.height = height;
  for (const Pixel& q : canonical_landmark_layout()) lm.points.push_back({u0 + (q.u - 0.5) * su, v0 + (q.v - 0.5) * sv});
  return lm;
}

/// Landmarks of the face mirrored about the image column `axis_u`.
inline FaceLandmarks mirror_landmarks(const FaceLandmarks& lm, double axis_u) {
  FaceLandmarks out = lm;
  for (int i = 0; i < 68; ++i) {
    const Pixel& m = lm.points[mirrored_landmark(i)];
    out.points[i] = {2.0 * axis_u - m.u, m.v};
  }
  return out;
}

/// Single-strip path from a to b with points every `step` metres (the end
/// point always included) and a constant normal.
inline SegmentPath straight_path(const Vec3& a, const Vec3& b, double step, const Vec3& normal = Vec3::UnitZ(),
                                 const std::string& label = "line") {
  SegmentPath p;
  p.label = label;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a).norm() / step - 1e-9)));
  for (std::size_t i = 0; i <= n; ++i) {
    PathPoint q;
    q.chi = a + (b - a) * (static_cast<double>(i) / static_cast<double>(n));
    q.eta = normal.normalized();
    p.points.push_back(q);
  }
  return p;
}

/// Commands that push the tool `depth` metres past the surface point
/// `surface` along `inward`, then return, `repeats` times.
inline SegmentPath intrusion_path(const Vec3& surface, const Vec3& inward, double depth, int repeats) {
  SegmentPath p;
  p.label = "intrusion";
  const Vec3 n = inward.normalized();
  for (int k = 0; k < repeats; ++k) {
    p.points.push_back({surface, n, 0});
    p.points.push_back({surface + depth * n, n, 0});
  }
  p.points.push_back({surface, n, 0});
  return p;
}

}  // namespace facelaser
