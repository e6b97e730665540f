#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "vslam/result.hpp"

namespace vslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// A 3D landmark position in the world frame, meters.
using Landmark3 = Eigen::Vector3d;

Mat3 skew(const Vec3& w);
Quat so3_exp(const Vec3& w);
Vec3 so3_log(const Quat& q);

// Rigid transform. All stored poses in this codebase are world-to-camera:
// p_cam = rotation * p_world + translation.
class PoseSE3 {
 public:
  PoseSE3() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
  PoseSE3(const Quat& q, const Vec3& t) : q_(q.normalized()), t_(t) {}

  static PoseSE3 identity() { return {}; }

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }

  PoseSE3 inverse() const {
    Quat qi = q_.conjugate();
    return {qi, -(qi * t_)};
  }
  PoseSE3 operator*(const PoseSE3& rhs) const {
    return {q_ * rhs.q_, q_ * rhs.t_ + t_};
  }
  Vec3 operator*(const Vec3& p) const { return q_ * p + t_; }

  // Camera center in world coordinates (for world-to-camera poses).
  Vec3 center() const { return -(q_.conjugate() * t_); }

  double rotation_angle_to(const PoseSE3& other) const;
  double translation_distance_to(const PoseSE3& other) const;

 private:
  Quat q_;
  Vec3 t_;
};

// Similarity transform: p' = scale * (rotation * p) + translation.
class PoseSim3 {
 public:
  PoseSim3() : q_(Quat::Identity()), t_(Vec3::Zero()), s_(1.0) {}
  PoseSim3(const Quat& q, const Vec3& t, double s)
      : q_(q.normalized()), t_(t), s_(s) {
    assert(s_ > 0.0);
  }
  explicit PoseSim3(const PoseSE3& se3)
      : q_(se3.rotation()), t_(se3.translation()), s_(1.0) {}

  static PoseSim3 identity() { return {}; }

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }
  double scale() const { return s_; }

  PoseSim3 inverse() const {
    Quat qi = q_.conjugate();
    return {qi, -(qi * t_) / s_, 1.0 / s_};
  }
  PoseSim3 operator*(const PoseSim3& rhs) const {
    return {q_ * rhs.q_, s_ * (q_ * rhs.t_) + t_, s_ * rhs.s_};
  }
  Vec3 operator*(const Vec3& p) const { return s_ * (q_ * p) + t_; }

  // Drops the scale into the translation, i.e. the SE3 with the same action
  // on directions; used when re-absorbing a corrected Sim3 keyframe pose.
  PoseSE3 to_se3_scale_absorbed() const { return {q_, t_ / s_}; }

 private:
  Quat q_;
  Vec3 t_;
  double s_;
};

struct PinholeCamera {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
  }
  bool contains(const Vec2& px) const {
    return px.x() >= 0 && px.x() < width && px.y() >= 0 && px.y() < height;
  }
  // Projection of a camera-frame point; caller guarantees z > 0.
  Vec2 project_point(const Vec3& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }
  // Camera-frame ray through a pixel at the given depth.
  Vec3 backproject_point(const Vec2& px, double depth) const {
    return {(px.x() - cx) / fx * depth, (px.y() - cy) / fy * depth, depth};
  }
  // Unit bearing vector through a pixel.
  Vec3 bearing(const Vec2& px) const {
    return Vec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0).normalized();
  }
};

inline constexpr double kDepthEpsilon = 1e-6;

// Pinhole projection of a world point; BehindCamera when depth <= epsilon.
Result<Vec2> project(const PinholeCamera& camera, const PoseSE3& world_to_cam,
                     const Landmark3& point);

// World point on the pixel ray at the given camera-frame depth.
Landmark3 backproject(const PinholeCamera& camera, const PoseSE3& world_to_cam,
                      const Vec2& px, double depth);

}  // namespace vslam
