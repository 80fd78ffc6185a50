// Copyright 2026 The f2f Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef F2F_CAMERA_HPP_
#define F2F_CAMERA_HPP_

#include <cmath>
#include <optional>

#include "f2f/core.hpp"

namespace f2f {

/// Rigid model-to-camera transform: v_cam = R * v + t. R is kept as a full
/// orthonormal matrix; optimization composes axis-angle increments onto it.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Pinhole intrinsics. The camera looks down +z; points with z <= z_near are
/// culled rather than projected.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Intrinsics for a pyramid level downscaled by `factor` (2 per level).
  CameraIntrinsics scaled(double factor) const {
    return CameraIntrinsics{fx * factor, fy * factor, cx * factor, cy * factor};
  }
};

inline constexpr double kZNear = 1e-3;

/// Rodrigues exponential: exp([w]x). Exact formula, orthonormal to rounding.
inline Mat3 axis_angle_to_matrix(const Vec3& w) {
  const double theta = w.norm();
  Mat3 k;
  k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  if (theta < 1e-12) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Log map (axis-angle of a rotation matrix), inverse of the above.
inline Vec3 matrix_to_axis_angle(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

/// Applies an axis-angle increment on the camera side: R <- exp([w]x) * R.
inline RigidPose compose_increment(const RigidPose& pose, const Vec3& rot_inc,
                                   const Vec3& trans_inc) {
  RigidPose out;
  out.rotation = axis_angle_to_matrix(rot_inc) * pose.rotation;
  out.translation = pose.translation + trans_inc;
  return out;
}

inline Vec3 transform_point(const RigidPose& pose, const Vec3& v) {
  return pose.rotation * v + pose.translation;
}

/// Full perspective projection of a camera-space point to continuous pixel
/// coordinates (pixel i covers [i, i+1), center at i + 0.5).
/// Returns nullopt when the point lies at or behind the near plane.
inline std::optional<Vec2> project_point(const CameraIntrinsics& cam,
                                         const Vec3& v_cam) {
  if (!(v_cam.z() > kZNear)) return std::nullopt;
  const double inv_z = 1.0 / v_cam.z();
  return Vec2(cam.fx * v_cam.x() * inv_z + cam.cx,
              cam.fy * v_cam.y() * inv_z + cam.cy);
}

/// d(projection)/d(v_cam), the 2x3 pinhole Jacobian.
inline Eigen::Matrix<double, 2, 3> projection_jacobian(
    const CameraIntrinsics& cam, const Vec3& v_cam) {
  const double inv_z = 1.0 / v_cam.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * inv_z, 0.0, -cam.fx * v_cam.x() * inv_z * inv_z,
       0.0, cam.fy * inv_z, -cam.fy * v_cam.y() * inv_z * inv_z;
  return j;
}

}  // namespace f2f

#endif  // F2F_CAMERA_HPP_
