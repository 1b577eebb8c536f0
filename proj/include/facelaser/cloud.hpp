#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/kdtree.hpp"

namespace facelaser {

using Color = std::array<std::uint8_t, 3>;

/// One sample of the facial surface: position, unit normal, colour.
struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Color color{0, 0, 0};
};

/// Unorganized point cloud. `has_normals` is false until normals are loaded
/// or estimated; the normal field is meaningless while it is false.
struct PointCloud {
  std::vector<SurfacePoint> points;
  std::string frame = "camera";
  bool has_normals = false;
  bool has_colors = false;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }

  [[nodiscard]] std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.position);
    return out;
  }

  [[nodiscard]] Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p.position;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
  }

  /// Axis-aligned bounds {min, max}; throws EmptyCloud.
  [[nodiscard]] std::pair<Vec3, Vec3> bounds() const {
    if (points.empty()) throw Error(ErrorCode::EmptyCloud, "bounds of an empty cloud");
    Vec3 lo = points.front().position;
    Vec3 hi = lo;
    for (const auto& p : points) {
      lo = lo.cwiseMin(p.position);
      hi = hi.cwiseMax(p.position);
    }
    return {lo, hi};
  }
};

inline PointCloud transformed(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) {
    p.position = t.apply(p.position);
    p.normal = t.apply_direction(p.normal);
  }
  return out;
}

/// Cloud plus a k-d tree over its positions, for repeated spatial queries.
class CloudIndex {
 public:
  explicit CloudIndex(const PointCloud& cloud) : cloud_(&cloud), positions_(cloud.positions()), tree_(positions_) {}

  CloudIndex(const CloudIndex&) = delete;
  CloudIndex& operator=(const CloudIndex&) = delete;

  [[nodiscard]] const PointCloud& cloud() const { return *cloud_; }
  [[nodiscard]] const KdTree& tree() const { return tree_; }
  [[nodiscard]] const std::vector<Vec3>& positions() const { return positions_; }

 private:
  const PointCloud* cloud_;
  std::vector<Vec3> positions_;
  KdTree tree_;
};

/// Centroid per occupied voxel of side `leaf`. Voxels sit on the lattice
/// floor(p / leaf), so a second pass over the output lands every centroid in
/// the voxel it came from. Output is ordered by voxel index.
inline PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) throw Error(ErrorCode::InvalidParam, "voxel leaf must be positive");
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "voxel_downsample on empty cloud");

  struct Accum {
    Vec3 position = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    std::array<double, 3> color{0.0, 0.0, 0.0};
    Vec3 first_normal = Vec3::UnitZ();
    std::size_t count = 0;
  };
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, Accum> voxels;
  for (const auto& p : cloud.points) {
    const Key key{static_cast<std::int64_t>(std::floor(p.position.x() / leaf)),
                  static_cast<std::int64_t>(std::floor(p.position.y() / leaf)),
                  static_cast<std::int64_t>(std::floor(p.position.z() / leaf))};
    Accum& a = voxels[key];
    if (a.count == 0) a.first_normal = p.normal;
    a.position += p.position;
    a.normal += p.normal;
    for (int c = 0; c < 3; ++c) a.color[c] += p.color[c];
    ++a.count;
  }

  PointCloud out;
  out.frame = cloud.frame;
  out.has_normals = cloud.has_normals;
  out.has_colors = cloud.has_colors;
  out.points.reserve(voxels.size());
  for (const auto& [key, a] : voxels) {
    const double n = static_cast<double>(a.count);
    SurfacePoint sp;
    sp.position = a.position / n;
    if (cloud.has_normals) {
      sp.normal = a.normal.norm() > 1e-12 ? Vec3(a.normal.normalized()) : a.first_normal;
    }
    for (int c = 0; c < 3; ++c) {
      sp.color[c] = static_cast<std::uint8_t>(std::lround(a.color[c] / n));
    }
    out.points.push_back(sp);
  }
  return out;
}

enum class NormalOrientation {
  toward_viewpoint,
  away_from_viewpoint,
};

/// PCA normals over the k nearest neighbours (the query point included),
/// signed relative to `viewpoint`.
inline PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint,
                                   NormalOrientation orientation = NormalOrientation::toward_viewpoint) {
  if (k < 3) throw Error(ErrorCode::InvalidParam, "normal estimation needs k >= 3");
  if (cloud.size() <= k) throw Error(ErrorCode::TooFewPoints, "cloud smaller than neighbourhood size");

  const std::vector<Vec3> pos = cloud.positions();
  const KdTree tree(pos);
  PointCloud out = cloud;
  out.has_normals = true;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto nbrs = tree.knn(pos[i], k);
    Vec3 mean = Vec3::Zero();
    for (const auto& [d2, j] : nbrs) mean += pos[j];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& [d2, j] : nbrs) {
      const Vec3 d = pos[j] - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 n = eig.eigenvectors().col(0).normalized();
    const double facing = n.dot(viewpoint - pos[i]);
    const bool flip = orientation == NormalOrientation::toward_viewpoint ? facing < 0.0 : facing > 0.0;
    if (flip) n = -n;
    out.points[i].normal = n;
  }
  return out;
}

struct RayHit {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double distance = 0.0;  // Euclidean, origin to hit point
};

/// First cloud point along the ray within a cylinder of `radius` around it.
inline std::optional<RayHit> raycast(const CloudIndex& index, const Vec3& origin, const Vec3& direction,
                                     double radius,
                                     double max_range = std::numeric_limits<double>::infinity()) {
  if (std::abs(direction.norm() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidParam, "ray direction not unit");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidParam, "raycast radius must be positive");
  const auto [idx, t] = index.tree().ray_first(origin, direction, radius, max_range);
  if (idx == KdTree::npos) return std::nullopt;
  const SurfacePoint& sp = index.cloud().points[idx];
  return RayHit{sp.position, sp.normal, (sp.position - origin).norm()};
}

inline std::optional<RayHit> raycast(const PointCloud& cloud, const Vec3& origin, const Vec3& direction,
                                     double radius) {
  const CloudIndex index(cloud);
  return raycast(index, origin, direction, radius);
}

}  // namespace facelaser
