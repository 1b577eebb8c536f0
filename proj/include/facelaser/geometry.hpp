#pragma once

// Rigid-body algebra shared by every stage of the pipeline: face frames from
// eye positions, tool orientation from surface normals, axis-angle
// conversion and pinhole projection.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "facelaser/errors.hpp"

namespace facelaser {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// SO(3) rotation plus translation, applied as R * x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_matrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }

  [[nodiscard]] Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  [[nodiscard]] Vec3 apply_direction(const Vec3& d) const { return rotation * d; }
};

/// 6x1 tool pose: position plus axis-angle orientation (theta * axis).
struct PoseVector6 {
  Vec3 position = Vec3::Zero();
  Vec3 orientation = Vec3::Zero();
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  [[nodiscard]] Mat3 matrix() const {
    Mat3 k = Mat3::Identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return k;
  }

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0) || width <= 0 || height <= 0 || cx < 0.0 || cx >= width ||
        cy < 0.0 || cy >= height) {
      throw Error(ErrorCode::InvalidParam, "camera intrinsics out of range");
    }
  }
};

enum class NormalFallback {
  reject,        // throw DegenerateNormal
  substitute_z,  // cross with [0,0,1] instead of the base y-axis
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidTransform invert(const RigidTransform& a) {
  const Mat3 rt = a.rotation.transpose();
  return {rt, -(rt * a.translation)};
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

inline Mat3 rot_x(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

/// Face frame in the observing camera: origin at the eye midpoint, x towards
/// the right eye, y constrained orthogonal to the optical axis.
inline RigidTransform face_pose_from_eyes(const Vec3& left_eye, const Vec3& right_eye) {
  if ((right_eye - left_eye).norm() < 1e-6) {
    throw Error(ErrorCode::DegenerateInput, "eye positions coincide");
  }
  const Vec3 center = 0.5 * (left_eye + right_eye);
  const Vec3 alpha = (right_eye - center).normalized();
  const Vec3 z_axis = Vec3::UnitZ();
  const Vec3 beta_raw = z_axis.cross(alpha);
  if (beta_raw.norm() < 1e-9) {
    throw Error(ErrorCode::DegenerateInput, "eye baseline aligned with the optical axis");
  }
  const Vec3 beta = beta_raw.normalized();
  const Vec3 gamma = alpha.cross(beta).normalized();

  RigidTransform pose;
  pose.rotation.col(0) = alpha;
  pose.rotation.col(1) = beta;
  pose.rotation.col(2) = gamma;
  pose.translation = center;
  return pose;
}

/// Tool orientation whose approach (third) axis equals the unit normal `eta`.
/// The first axis is base-y cross eta, the second completes a right-handed frame.
inline Mat3 rotation_from_normal(const Vec3& eta, NormalFallback fallback = NormalFallback::reject) {
  if (std::abs(eta.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidParam, "normal is not unit length");
  }
  Vec3 alpha = Vec3::UnitY().cross(eta);
  if (alpha.norm() < 1e-6) {
    if (fallback == NormalFallback::reject) {
      throw Error(ErrorCode::DegenerateNormal, "normal parallel to base y-axis");
    }
    alpha = Vec3::UnitZ().cross(eta);
  }
  alpha.normalize();
  const Vec3 beta = eta.cross(alpha).normalized();

  Mat3 r;
  r.col(0) = alpha;
  r.col(1) = beta;
  r.col(2) = eta;
  return r;
}

/// Rodrigues map; identity below 1e-12 rad.
inline Mat3 axis_angle_to_rotation(const Vec3& nu) {
  const double theta = nu.norm();
  if (theta < 1e-12) return Mat3::Identity();
  const Vec3 axis = nu / theta;
  Mat3 k;
  k << 0.0, -axis.z(), axis.y(),
       axis.z(), 0.0, -axis.x(),
       -axis.y(), axis.x(), 0.0;
  return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * (k * k);
}

/// Axis-angle vector theta * axis with theta in [0, pi].
///
/// The axis comes from the antisymmetric part u = (R32-R23, R13-R31, R21-R12),
/// whose norm is 2 sin(theta). theta is taken from atan2(|u|/2, (tr-1)/2),
/// which agrees with acos((tr-1)/2) but stays accurate near 0 and pi.
inline Vec3 rotation_to_axis_angle(const Mat3& r) {
  const Vec3 u(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double trace = r.trace();
  const double cos_theta = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  const double sin_theta = 0.5 * u.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (u.norm() >= 1e-6) {
    return theta * u.normalized();
  }
  if (trace > 0.0) {
    // small angle: u ~ 2 theta axis, series of theta / (2 sin theta)
    return 0.5 * (1.0 + theta * theta / 6.0) * u;
  }
  // near a half-turn: (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T
  const Mat3 outer = (0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
  Eigen::Index k = 0;
  outer.diagonal().maxCoeff(&k);
  Vec3 axis = outer.col(k) / std::sqrt(std::max(outer(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(u) < 0.0) axis = -axis;
  return theta * axis;
}

/// Rotation angle of R in [0, pi].
inline double rotation_angle(const Mat3& r) { return rotation_to_axis_angle(r).norm(); }

inline PoseVector6 to_pose_vector(const RigidTransform& t) {
  return {t.translation, rotation_to_axis_angle(t.rotation)};
}

inline RigidTransform to_transform(const PoseVector6& p) {
  return {axis_angle_to_rotation(p.orientation), p.position};
}

/// False when the transformed point is not in front of the camera.
inline bool try_project_point(const Vec3& x, const CameraIntrinsics& k, const RigidTransform& extrinsics,
                              Pixel& out) {
  const Vec3 c = extrinsics.apply(x);
  if (c.z() <= 1e-6) return false;
  out.u = k.fx * c.x() / c.z() + k.cx;
  out.v = k.fy * c.y() / c.z() + k.cy;
  return true;
}

/// Pinhole projection K [R|t] x, dehomogenized; not clamped to the image.
inline Pixel project_point(const Vec3& x, const CameraIntrinsics& k, const RigidTransform& extrinsics) {
  Pixel p;
  if (!try_project_point(x, k, extrinsics, p)) {
    throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
  }
  return p;
}

}  // namespace facelaser
