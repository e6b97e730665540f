#include "vslam/geometry.hpp"

#include <cmath>

namespace vslam {

const char* to_string(Fail f) {
  switch (f) {
    case Fail::None: return "none";
    case Fail::BehindCamera: return "behind-camera";
    case Fail::LowParallax: return "low-parallax";
    case Fail::NegativeDepth: return "negative-depth";
    case Fail::HighReprojection: return "high-reprojection";
    case Fail::InsufficientData: return "insufficient-data";
    case Fail::NoConsensus: return "no-consensus";
    case Fail::Degenerate: return "degenerate-configuration";
    case Fail::TooFewMatches: return "too-few-matches";
    case Fail::NoCandidate: return "no-candidate";
    case Fail::BackendFailure: return "backend-failure";
    case Fail::DimensionMismatch: return "dimension-mismatch";
    case Fail::EmptyCorpus: return "empty-corpus";
    case Fail::RankDeficient: return "rank-deficient";
    case Fail::EmptyOverlap: return "empty-overlap";
    case Fail::TooShortTrajectory: return "too-short-trajectory";
    case Fail::RejectionBudgetExceeded: return "rejection-budget-exceeded";
  }
  return "unknown";
}

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Quat so3_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  const double half = 0.5 * theta;
  const Vec3 axis = w / theta;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * axis.x(), s * axis.y(), s * axis.z());
}

Vec3 so3_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0) q.coeffs() *= -1.0;  // shortest arc
  const Vec3 v(q.x(), q.y(), q.z());
  const double vnorm = v.norm();
  if (vnorm < 1e-12) return 2.0 * v;
  const double theta = 2.0 * std::atan2(vnorm, q.w());
  return v * (theta / vnorm);
}

double PoseSE3::rotation_angle_to(const PoseSE3& other) const {
  return so3_log(q_.conjugate() * other.q_).norm();
}

double PoseSE3::translation_distance_to(const PoseSE3& other) const {
  return (t_ - other.t_).norm();
}

Result<Vec2> project(const PinholeCamera& camera, const PoseSE3& world_to_cam,
                     const Landmark3& point) {
  const Vec3 p_cam = world_to_cam * point;
  if (p_cam.z() <= kDepthEpsilon) return Fail::BehindCamera;
  return camera.project_point(p_cam);
}

Landmark3 backproject(const PinholeCamera& camera, const PoseSE3& world_to_cam,
                      const Vec2& px, double depth) {
  return world_to_cam.inverse() * camera.backproject_point(px, depth);
}

}  // namespace vslam
