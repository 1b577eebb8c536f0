#pragma once

// Seven-region facial segmentation: landmark polygons on the image plane,
// back-projection of every cloud point and an even-odd inclusion test.

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/polygon.hpp"

namespace facelaser {

enum class RegionLabel { forehead, nose, upper_lips, left_cheek, right_cheek, left_jaw, right_jaw };

inline constexpr std::array<RegionLabel, 7> kAllRegions = {
    RegionLabel::forehead,   RegionLabel::nose,     RegionLabel::upper_lips, RegionLabel::left_cheek,
    RegionLabel::right_cheek, RegionLabel::left_jaw, RegionLabel::right_jaw};

/// Classification priority: protruding and small regions claim shared
/// borders before the broad ones.
inline constexpr std::array<RegionLabel, 7> kMatchOrder = {
    RegionLabel::nose,        RegionLabel::upper_lips, RegionLabel::forehead, RegionLabel::left_cheek,
    RegionLabel::right_cheek, RegionLabel::left_jaw,   RegionLabel::right_jaw};

inline const char* to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::forehead: return "forehead";
    case RegionLabel::nose: return "nose";
    case RegionLabel::upper_lips: return "upper_lips";
    case RegionLabel::left_cheek: return "left_cheek";
    case RegionLabel::right_cheek: return "right_cheek";
    case RegionLabel::left_jaw: return "left_jaw";
    case RegionLabel::right_jaw: return "right_jaw";
  }
  return "unknown";
}

inline std::optional<RegionLabel> region_from_string(const std::string& s) {
  for (RegionLabel l : kAllRegions) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

/// 68-point landmark set in the usual iBUG ordering (0-16 jaw line starting
/// on the image left, 17-26 brows, 27-35 nose, 36-47 eyes, 48-67 lips).
struct FaceLandmarks {
  std::vector<Pixel> points;
  int width = 0;
  int height = 0;
};

struct RegionPolygon {
  RegionLabel label = RegionLabel::forehead;
  std::vector<Pixel> vertices;
};

inline bool point_in_polygon(const Pixel& p, const RegionPolygon& poly) { return point_in_polygon(p, poly.vertices); }

struct SegmentationOptions {
  double forehead_extension = 0.6;  // fraction of brow-to-chin height
};

/// Index of each landmark in the horizontally mirrored face.
inline int mirrored_landmark(int i) {
  if (i <= 16) return 16 - i;
  if (i <= 26) return 43 - i;
  if (i <= 30) return i;
  if (i <= 35) return 66 - i;
  if (i <= 47) {
    static constexpr int eyes[12] = {45, 44, 43, 42, 47, 46, 39, 38, 37, 36, 41, 40};
    return eyes[i - 36];
  }
  if (i <= 54) return 102 - i;
  if (i <= 59) return 114 - i;
  if (i <= 64) return 124 - i;
  return 132 - i;
}

/// The seven region polygons from fixed landmark templates. Eyes, brows and
/// lips stay outside every region. "left" is the image-left side
/// (landmarks 0-8).
inline std::vector<RegionPolygon> build_region_polygons(const FaceLandmarks& lm, const SegmentationOptions& opts = {}) {
  if (lm.points.size() != 68) throw Error(ErrorCode::MalformedLandmarks, "expected 68 landmarks");
  for (const auto& p : lm.points) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw Error(ErrorCode::MalformedLandmarks, "non-finite landmark");
  }
  auto pick = [&](std::initializer_list<int> ids) {
    std::vector<Pixel> out;
    for (int i : ids) out.push_back(lm.points[i]);
    return out;
  };

  double brow_v = 0.0;
  for (int i = 17; i <= 26; ++i) brow_v += lm.points[i].v;
  brow_v /= 10.0;
  const double lift = opts.forehead_extension * (lm.points[8].v - brow_v);
  std::vector<Pixel> forehead = pick({17, 18, 19, 20, 21, 22, 23, 24, 25, 26});
  forehead.push_back({lm.points[26].u, lm.points[26].v - lift});
  forehead.push_back({lm.points[17].u, lm.points[17].v - lift});

  std::vector<Pixel> nose_pts;
  for (int i = 27; i <= 35; ++i) nose_pts.push_back(lm.points[i]);

  std::vector<RegionPolygon> polys = {
      {RegionLabel::forehead, forehead},
      {RegionLabel::nose, poly_detail::convex_hull(nose_pts)},
      {RegionLabel::upper_lips, pick({31, 32, 33, 34, 35, 54, 53, 52, 51, 50, 49, 48})},
      {RegionLabel::left_cheek, pick({0, 36, 41, 40, 39, 31, 48, 4, 3, 2, 1})},
      {RegionLabel::right_cheek, pick({16, 45, 46, 47, 42, 35, 54, 12, 13, 14, 15})},
      {RegionLabel::left_jaw, pick({4, 48, 59, 58, 57, 8, 7, 6, 5})},
      {RegionLabel::right_jaw, pick({12, 54, 55, 56, 57, 8, 9, 10, 11})},
  };
  for (const auto& poly : polys) {
    if (!is_simple_polygon(poly.vertices)) {
      throw Error(ErrorCode::MalformedLandmarks, std::string(to_string(poly.label)) + " polygon is not simple");
    }
  }
  return polys;
}

struct SegmentedFace {
  std::map<RegionLabel, PointCloud> regions;
  PointCloud residual;
  std::vector<int> assignment;  // per input point: index into kAllRegions, or -1
};

/// Projects every point into the image and assigns it to the first polygon
/// in kMatchOrder containing the pixel. Points that cannot be projected, or
/// fall in no polygon, go to the residual. Per-region inclusion runs as
/// independent tasks; the assignment is a single ordered reduction.
inline SegmentedFace segment_face(const PointCloud& cloud, const std::vector<RegionPolygon>& polygons,
                                  const CameraIntrinsics& intrinsics, const RigidTransform& extrinsics) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "segment_face on empty cloud");
  const std::size_t n = cloud.size();

  std::vector<Pixel> pixels(n);
  std::vector<char> visible(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    visible[i] = try_project_point(cloud.points[i].position, intrinsics, extrinsics, pixels[i]) ? 1 : 0;
  }

  std::vector<std::future<std::vector<char>>> tasks;
  tasks.reserve(polygons.size());
  for (const auto& poly : polygons) {
    tasks.push_back(std::async(std::launch::async, [&pixels, &visible, &poly, n] {
      std::vector<char> mask(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        mask[i] = visible[i] && point_in_polygon(pixels[i], poly.vertices) ? 1 : 0;
      }
      return mask;
    }));
  }
  std::map<RegionLabel, std::vector<char>> masks;
  for (std::size_t k = 0; k < polygons.size(); ++k) masks[polygons[k].label] = tasks[k].get();

  SegmentedFace out;
  out.assignment.assign(n, -1);
  for (RegionLabel l : kAllRegions) {
    PointCloud region;
    region.frame = cloud.frame;
    region.has_normals = cloud.has_normals;
    region.has_colors = cloud.has_colors;
    out.regions[l] = region;
  }
  out.residual.frame = cloud.frame;
  out.residual.has_normals = cloud.has_normals;
  out.residual.has_colors = cloud.has_colors;

  for (std::size_t i = 0; i < n; ++i) {
    for (RegionLabel l : kMatchOrder) {
      const auto it = masks.find(l);
      if (it != masks.end() && it->second[i]) {
        out.assignment[i] = static_cast<int>(l);
        break;
      }
    }
    if (out.assignment[i] < 0) {
      out.residual.points.push_back(cloud.points[i]);
    } else {
      out.regions[static_cast<RegionLabel>(out.assignment[i])].points.push_back(cloud.points[i]);
    }
  }
  return out;
}

}  // namespace facelaser
