#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vslam/geometry.hpp"

namespace vslam {

struct TriangulationOptions {
  double min_parallax_deg = 1.0;
  double max_reproj_px = 2.0;
};

// Linear DLT followed by one Gauss-Newton refinement of the point.
Result<Landmark3> triangulate(const PinholeCamera& cam_a, const PoseSE3& pose_a,
                              const PinholeCamera& cam_b, const PoseSE3& pose_b,
                              const Vec2& px_a, const Vec2& px_b,
                              const TriangulationOptions& opts = {});

struct RansacOptions {
  int iterations = 256;
  double inlier_threshold_px = 3.0;
  int min_inliers = 15;
  double confidence = 0.999;
  std::uint64_t seed = 42;
};

struct PnPResult {
  PoseSE3 pose;  // world-to-camera
  std::vector<char> inlier_mask;
  int inlier_count = 0;
};

// P3P minimal solver inside RANSAC, then Gauss-Newton polish on all inliers.
Result<PnPResult> solve_pnp_ransac(const PinholeCamera& camera,
                                   std::span<const Landmark3> points,
                                   std::span<const Vec2> pixels,
                                   const RansacOptions& opts = {});

struct RelativePoseResult {
  PoseSE3 pose;  // frame A to frame B, unit-norm translation
  std::vector<char> inlier_mask;
  int inlier_count = 0;
  double median_parallax_deg = 0.0;
};

// Eight-point essential matrix inside RANSAC with cheirality disambiguation.
Result<RelativePoseResult> solve_essential_ransac(
    std::span<const Vec2> pixels_a, std::span<const Vec2> pixels_b,
    const PinholeCamera& camera, const RansacOptions& opts = {});

// Least-squares similarity mapping src onto dst (Umeyama closed form):
// minimizes sum_i | dst_i - (s R src_i + t) |^2. with_scale=false fixes s=1.
Result<PoseSim3> solve_sim3_umeyama(std::span<const Landmark3> src,
                                    std::span<const Landmark3> dst,
                                    bool with_scale);

}  // namespace vslam
