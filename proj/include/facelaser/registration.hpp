#pragma once

// Scan viewpoints around a detected face and multi-view alignment with
// linearized point-to-plane ICP.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/kdtree.hpp"

namespace facelaser {

enum class ViewpointArcModel {
  circular,    // z = -d_min cos(phi) on both arcs
  as_printed,  // longitudinal z held at -d_min
};

enum class ViewpointArc { frontal, longitudinal, latitudinal };

struct Viewpoint {
  RigidTransform in_face;  // F T_v
  RigidTransform in_base;  // B T_v = B T_F * F T_v
  ViewpointArc arc = ViewpointArc::frontal;
  double phi = 0.0;
};

struct ViewpointSet {
  std::vector<Viewpoint> views;
  double phi_step = 0.0;
  double d_min = 0.0;
  int n_per_side = 0;

  [[nodiscard]] std::vector<RigidTransform> poses() const {
    std::vector<RigidTransform> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(v.in_base);
    return out;
  }
};

/// Viewpoint in the face frame for one arc sample.
inline RigidTransform viewpoint_in_face(ViewpointArc arc, double phi, double d_min,
                                        ViewpointArcModel model = ViewpointArcModel::circular) {
  RigidTransform t;
  switch (arc) {
    case ViewpointArc::frontal:
      t.translation = Vec3(0.0, 0.0, -d_min);
      break;
    case ViewpointArc::longitudinal:
      t.rotation = rot_y(phi);
      t.translation = Vec3(-d_min * std::sin(phi), 0.0,
                           model == ViewpointArcModel::circular ? -d_min * std::cos(phi) : -d_min);
      break;
    case ViewpointArc::latitudinal:
      t.rotation = rot_x(phi);
      t.translation = Vec3(0.0, d_min * std::sin(phi), -d_min * std::cos(phi));
      break;
  }
  return t;
}

/// Frontal view followed by +-k*phi_step samples on the longitudinal (about
/// face y) and latitudinal (about face x) arcs: 4 * n_per_side + 1 poses.
inline ViewpointSet estimate_viewpoints(const RigidTransform& face_pose, double d_min, double phi_step,
                                        int n_per_side,
                                        ViewpointArcModel model = ViewpointArcModel::circular) {
  if (!(d_min > 0.0)) throw Error(ErrorCode::InvalidParam, "d_min must be positive");
  if (!(phi_step > 0.0 && phi_step < kPi / 2.0)) throw Error(ErrorCode::InvalidParam, "phi_step out of (0, pi/2)");
  if (n_per_side < 0) throw Error(ErrorCode::InvalidParam, "n_per_side must be non-negative");

  ViewpointSet set;
  set.phi_step = phi_step;
  set.d_min = d_min;
  set.n_per_side = n_per_side;
  auto add = [&](ViewpointArc arc, double phi) {
    Viewpoint v;
    v.arc = arc;
    v.phi = phi;
    v.in_face = viewpoint_in_face(arc, phi, d_min, model);
    v.in_base = compose(face_pose, v.in_face);
    set.views.push_back(v);
  };
  add(ViewpointArc::frontal, 0.0);
  for (ViewpointArc arc : {ViewpointArc::longitudinal, ViewpointArc::latitudinal}) {
    for (int k = 1; k <= n_per_side; ++k) {
      add(arc, k * phi_step);
      add(arc, -k * phi_step);
    }
  }
  return set;
}

/// Pose of b expressed in a: inverse(a) * b.
inline RigidTransform relative_viewpoint_transform(const RigidTransform& a, const RigidTransform& b) {
  return compose(invert(a), b);
}

struct IcpOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;           // relative change of the objective
  double max_correspondence = 0.02;  // meters
};

struct IcpResult {
  RigidTransform transform;
  double rmse = 0.0;  // point-to-plane, over gated correspondences
  int iterations = 0;
  bool converged = false;
  std::size_t correspondences = 0;
  std::vector<double> objective_history;  // mean squared residual per accepted iterate
};

namespace icp_detail {

// Target cloud prepared for pairing: k-d tree plus boundary flags. A point is
// on the boundary when its tangent-plane neighbours leave an angular gap
// wider than 90 degrees; pairs landing there are dropped so that partially
// overlapping views do not drag each other along the rim.
struct Target {
  const PointCloud* cloud = nullptr;
  std::vector<Vec3> positions;
  KdTree tree;
  std::vector<char> boundary;

  explicit Target(const PointCloud& c, std::size_t k = 16)
      : cloud(&c), positions(c.positions()), tree(positions), boundary(positions.size(), 0) {
    if (positions.size() <= k) return;
    std::vector<double> angles;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const Vec3 n = c.points[i].normal;
      const Vec3 u = n.unitOrthogonal();
      const Vec3 v = n.cross(u);
      angles.clear();
      for (const auto& [d2, j] : tree.knn(positions[i], k + 1)) {
        if (j == i) continue;
        const Vec3 d = positions[j] - positions[i];
        angles.push_back(std::atan2(d.dot(v), d.dot(u)));
      }
      std::sort(angles.begin(), angles.end());
      double gap = angles.front() + 2.0 * kPi - angles.back();
      for (std::size_t a = 1; a < angles.size(); ++a) gap = std::max(gap, angles[a] - angles[a - 1]);
      boundary[i] = gap > kPi / 2.0 ? 1 : 0;
    }
  }

  Target(const Target&) = delete;
  Target& operator=(const Target&) = delete;
};

// Nearest-neighbour pairs within the gate, excluding boundary targets.
// objective: mean squared point-to-plane residual over the pairs.
struct Pairing {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // source, target

  [[nodiscard]] double rmse() const { return std::sqrt(objective); }
};

inline Pairing pair_up(const std::vector<Vec3>& src, const Target& target, const RigidTransform& t, double gate) {
  Pairing out;
  const double gate2 = gate * gate;
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 p = t.apply(src[i]);
    const auto [j, d2] = target.tree.nearest(p);
    if (j == KdTree::npos || d2 > gate2 || target.boundary[j]) continue;
    const SurfacePoint& q = target.cloud->points[j];
    const double r = (p - q.position).dot(q.normal);
    sum += r * r;
    out.pairs.emplace_back(i, j);
  }
  if (!out.pairs.empty()) out.objective = sum / static_cast<double>(out.pairs.size());
  return out;
}

// Solves H x = g, falling back to a truncated pseudo-inverse when the
// system is ill conditioned (planar or symmetric geometry).
inline Eigen::Matrix<double, 6, 1> solve_normal_equations(const Eigen::Matrix<double, 6, 6>& h,
                                                          const Eigen::Matrix<double, 6, 1>& g) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
  const auto& ev = eig.eigenvalues();
  const double max_ev = ev.cwiseAbs().maxCoeff();
  const double min_ev = ev.cwiseAbs().minCoeff();
  if (max_ev <= 0.0) return Eigen::Matrix<double, 6, 1>::Zero();
  if (min_ev > 0.0 && max_ev / min_ev <= 1e12) return h.ldlt().solve(g);
  Eigen::Matrix<double, 6, 1> inv = Eigen::Matrix<double, 6, 1>::Zero();
  for (int i = 0; i < 6; ++i) {
    if (std::abs(ev[i]) > max_ev * 1e-12) inv[i] = 1.0 / ev[i];
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * g;
}

}  // namespace icp_detail

/// Minimizes sum(((R s + t - q) . n_q)^2) over nearest-neighbour pairs within
/// the gate whose target is not a boundary point. Each update is accepted only if the re-paired objective does
/// not increase; otherwise the step is halved, and the loop stops when no
/// halving helps.
inline IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                                    const IcpOptions& opts = {}) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::EmptyCloud, "ICP needs non-empty clouds");
  if (!target.has_normals) throw Error(ErrorCode::InvalidParam, "ICP target has no normals");
  if (!(opts.max_correspondence > 0.0) || opts.max_iterations < 0) {
    throw Error(ErrorCode::InvalidParam, "bad ICP options");
  }

  const std::vector<Vec3> src = source.positions();
  const icp_detail::Target prepared(target);

  IcpResult result;
  result.transform = init;
  icp_detail::Pairing current = icp_detail::pair_up(src, prepared, init, opts.max_correspondence);
  if (current.pairs.empty()) throw Error(ErrorCode::NoCorrespondences, "no pairs within the correspondence gate");
  result.objective_history.push_back(current.objective);

  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& [i, j] : current.pairs) {
      const Vec3 p = result.transform.apply(src[i]);
      const Vec3& q = target.points[j].position;
      const Vec3& n = target.points[j].normal;
      Eigen::Matrix<double, 6, 1> a;
      a.head<3>() = p.cross(n);
      a.tail<3>() = n;
      const double r = (p - q).dot(n);
      h += a * a.transpose();
      g -= a * r;
    }
    const Eigen::Matrix<double, 6, 1> x = icp_detail::solve_normal_equations(h, g);

    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving < 12 && !accepted; ++halving, scale *= 0.5) {
      const RigidTransform delta{axis_angle_to_rotation(scale * x.head<3>()), scale * x.tail<3>()};
      const RigidTransform candidate = compose(delta, result.transform);
      icp_detail::Pairing next = icp_detail::pair_up(src, prepared, candidate, opts.max_correspondence);
      if (next.pairs.empty() || next.objective > current.objective) continue;
      const double previous = current.objective;
      result.transform = candidate;
      current = std::move(next);
      result.objective_history.push_back(current.objective);
      accepted = true;
      result.iterations = it + 1;
      const double change = std::abs(previous - current.objective) / std::max(previous, 1e-300);
      if (change < opts.tolerance || current.objective <= 1e-30) result.converged = true;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }
  result.rmse = current.rmse();
  result.correspondences = current.pairs.size();
  return result;
}

struct MergeReport {
  std::size_t view = 0;
  double rmse_before = 0.0;  // point-to-plane at the kinematic pre-alignment
  IcpResult icp;
};

struct MergeResult {
  PointCloud cloud;
  std::vector<MergeReport> reports;  // one per view after the first
};

struct MergeOptions {
  double leaf = 0.002;
  IcpOptions icp{};
  std::size_t normal_neighbors = 12;
};

/// Brings every view into the first view's frame: kinematic pre-alignment
/// from the viewpoint poses, ICP refinement against the accumulated model,
/// concatenation and voxel downsampling. Views lacking normals get PCA
/// normals oriented towards their own sensor origin.
inline MergeResult merge_views(const std::vector<PointCloud>& clouds, const std::vector<RigidTransform>& poses,
                               const MergeOptions& opts = {}) {
  if (clouds.size() != poses.size()) throw Error(ErrorCode::InvalidParam, "cloud and pose counts differ");
  if (clouds.empty()) throw Error(ErrorCode::EmptyCloud, "no views to merge");

  auto with_normals = [&](const PointCloud& c) {
    if (c.has_normals) return c;
    return estimate_normals(c, opts.normal_neighbors, Vec3::Zero());
  };

  MergeResult result;
  PointCloud model = with_normals(clouds.front());
  model.frame = "view0";
  for (std::size_t v = 1; v < clouds.size(); ++v) {
    const PointCloud view = with_normals(clouds[v]);
    const RigidTransform init = relative_viewpoint_transform(poses.front(), poses[v]);
    MergeReport report;
    report.view = v;
    {
      const icp_detail::Target prepared(model);
      report.rmse_before = icp_detail::pair_up(view.positions(), prepared, init, opts.icp.max_correspondence).rmse();
    }
    report.icp = icp_point_to_plane(view, model, init, opts.icp);
    const PointCloud aligned = transformed(view, report.icp.transform);
    model.points.insert(model.points.end(), aligned.points.begin(), aligned.points.end());
    model.has_colors = model.has_colors && view.has_colors;
    result.reports.push_back(report);
  }
  result.cloud = voxel_downsample(model, opts.leaf);
  result.cloud.frame = "view0";
  return result;
}

}  // namespace facelaser
