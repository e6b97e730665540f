#pragma once

#include <random>

#include "vslam/geometry.hpp"

namespace vslam::testutil {

inline Vec3 random_vec3(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

inline Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  if (q.norm() < 1e-9) return Quat::Identity();
  q.normalize();
  return q;
}

inline PoseSE3 random_pose(std::mt19937_64& rng, double extent = 1.0) {
  return {random_rotation(rng), random_vec3(rng, extent)};
}

inline PinholeCamera default_camera() {
  PinholeCamera cam;
  cam.fx = 450.0;
  cam.fy = 455.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  return cam;
}

}  // namespace vslam::testutil
