#include "vslam/multiview.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace vslam {

namespace {

constexpr double kPi = 3.14159265358979323846;

double parallax_deg(const Vec3& point, const Vec3& center_a,
                    const Vec3& center_b) {
  const Vec3 ra = point - center_a;
  const Vec3 rb = point - center_b;
  const double denom = ra.norm() * rb.norm();
  if (denom < 1e-15) return 0.0;
  const double c = std::clamp(ra.dot(rb) / denom, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

Eigen::Matrix<double, 3, 4> projection_matrix(const PinholeCamera& cam,
                                              const PoseSE3& pose) {
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = pose.rotation_matrix();
  rt.rightCols<1>() = pose.translation();
  Mat3 k = Mat3::Identity();
  k(0, 0) = cam.fx;
  k(1, 1) = cam.fy;
  k(0, 2) = cam.cx;
  k(1, 2) = cam.cy;
  return k * rt;
}

// Adaptive iteration bound for the observed inlier ratio.
int ransac_required_iterations(double confidence, double inlier_ratio,
                               int sample_size, int cap) {
  if (inlier_ratio <= 0.0) return cap;
  const double w = std::pow(inlier_ratio, sample_size);
  if (w >= 1.0 - 1e-12) return 1;
  const double denom = std::log(1.0 - w);
  if (denom >= -1e-15) return cap;
  const int n = static_cast<int>(std::ceil(std::log(1.0 - confidence) / denom));
  return std::clamp(n, 1, cap);
}

// Grunert's P3P: depths of three world points along three bearing rays.
// Coefficients derived by eliminating u from the law-of-cosines system with
// s2 = u s1, s3 = v s1; real positive roots of the quartic in v give the
// candidate depth triplets.
std::vector<std::array<double, 3>> p3p_depths(
    const std::array<Vec3, 3>& world, const std::array<Vec3, 3>& rays) {
  const double a2 = (world[1] - world[2]).squaredNorm();
  const double b2 = (world[0] - world[2]).squaredNorm();
  const double c2 = (world[0] - world[1]).squaredNorm();
  if (a2 < 1e-18 || b2 < 1e-18 || c2 < 1e-18) return {};
  const double ca = rays[1].dot(rays[2]);
  const double cb = rays[0].dot(rays[2]);
  const double cg = rays[0].dot(rays[1]);

  const double a4 = a2 * a2 - 2 * a2 * b2 - 2 * a2 * c2 + b2 * b2 -
                    4 * b2 * c2 * ca * ca + 2 * b2 * c2 + c2 * c2;
  const double a3 =
      4 * (-a2 * a2 * cb + a2 * b2 * ca * cg + a2 * b2 * cb + 2 * a2 * c2 * cb -
           b2 * b2 * ca * cg + 2 * b2 * c2 * ca * ca * cb +
           b2 * c2 * ca * cg - b2 * c2 * cb - c2 * c2 * cb);
  const double a2c =
      2 * (2 * a2 * a2 * cb * cb + a2 * a2 - 4 * a2 * b2 * ca * cb * cg -
           2 * a2 * b2 * cg * cg - 4 * a2 * c2 * cb * cb - 2 * a2 * c2 +
           2 * b2 * b2 * ca * ca + 2 * b2 * b2 * cg * cg - b2 * b2 -
           2 * b2 * c2 * ca * ca - 4 * b2 * c2 * ca * cb * cg +
           2 * c2 * c2 * cb * cb + c2 * c2);
  const double a1 =
      4 * (-a2 * a2 * cb + a2 * b2 * ca * cg + 2 * a2 * b2 * cb * cg * cg -
           a2 * b2 * cb + 2 * a2 * c2 * cb - b2 * b2 * ca * cg +
           b2 * c2 * ca * cg + b2 * c2 * cb - c2 * c2 * cb);
  const double a0 = a2 * a2 - 4 * a2 * b2 * cg * cg + 2 * a2 * b2 -
                    2 * a2 * c2 + b2 * b2 - 2 * b2 * c2 + c2 * c2;

  if (std::abs(a4) < 1e-14 * std::max({std::abs(a3), std::abs(a2c), 1.0}))
    return {};

  // Roots of the quartic via the companion matrix.
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  companion(0, 3) = -a0 / a4;
  companion(1, 3) = -a1 / a4;
  companion(2, 3) = -a2c / a4;
  companion(3, 3) = -a3 / a4;
  Eigen::EigenSolver<Eigen::Matrix4d> es(companion, false);

  std::vector<std::array<double, 3>> out;
  const double scale2 = std::max({a2, b2, c2});
  for (int i = 0; i < 4; ++i) {
    const auto root = es.eigenvalues()[i];
    if (std::abs(root.imag()) > 1e-7 * (1.0 + std::abs(root.real()))) continue;
    const double v = root.real();
    if (v <= 0) continue;
    const double den = 1 + v * v - 2 * v * cb;
    if (den <= 1e-15) continue;
    const double disc = cg * cg - 1 + (c2 / b2) * den;
    if (disc < 0) continue;
    const double sq = std::sqrt(disc);
    for (const double u : {cg + sq, cg - sq}) {
      if (u <= 0) continue;
      const double e1 =
          b2 * (u * u + v * v - 2 * u * v * ca) - a2 * (1 + v * v - 2 * v * cb);
      if (std::abs(e1) > 1e-5 * scale2) continue;
      const double s1 = std::sqrt(b2 / den);
      out.push_back({s1, u * s1, v * s1});
    }
  }
  return out;
}

// Rigid transform (world -> camera) from 3+ exact point pairs; thin wrapper
// over the Umeyama solver with scale fixed.
Result<PoseSE3> absolute_orientation(std::span<const Vec3> world,
                                     std::span<const Vec3> cam) {
  auto sim = solve_sim3_umeyama(world, cam, /*with_scale=*/false);
  if (!sim) return sim.error();
  return PoseSE3(sim->rotation(), sim->translation());
}

struct ReprojectionStats {
  int inliers = 0;
  double sq_error_sum = 0.0;
};

ReprojectionStats score_pose(const PinholeCamera& camera, const PoseSE3& pose,
                             std::span<const Landmark3> points,
                             std::span<const Vec2> pixels, double threshold_px,
                             std::vector<char>* mask) {
  ReprojectionStats st;
  const double thr2 = threshold_px * threshold_px;
  for (size_t i = 0; i < points.size(); ++i) {
    bool in = false;
    if (auto px = project(camera, pose, points[i])) {
      const double e2 = (*px - pixels[i]).squaredNorm();
      if (e2 <= thr2) {
        in = true;
        ++st.inliers;
        st.sq_error_sum += e2;
      }
    }
    if (mask) (*mask)[i] = in ? 1 : 0;
  }
  return st;
}

// Pose-only Gauss-Newton on the reprojection error of the given subset.
PoseSE3 refine_pose_gauss_newton(const PinholeCamera& camera, PoseSE3 pose,
                                 std::span<const Landmark3> points,
                                 std::span<const Vec2> pixels,
                                 std::span<const char> mask, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    int used = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      if (!mask.empty() && !mask[i]) continue;
      const Vec3 pc = pose * points[i];
      if (pc.z() <= kDepthEpsilon) continue;
      const Vec2 r = camera.project_point(pc) - pixels[i];
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dpi;
      dpi << camera.fx * iz, 0, -camera.fx * pc.x() * iz * iz, 0,
          camera.fy * iz, -camera.fy * pc.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> jac;
      jac.leftCols<3>() = dpi;
      jac.rightCols<3>() = -dpi * skew(pc);
      h += jac.transpose() * jac;
      g += jac.transpose() * r;
      ++used;
    }
    if (used < 3) break;
    const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    const Quat dq = so3_exp(delta.tail<3>());
    pose = PoseSE3(dq * pose.rotation(),
                   dq * pose.translation() + delta.head<3>());
    if (delta.norm() < 1e-12) break;
  }
  return pose;
}

}  // namespace

Result<Landmark3> triangulate(const PinholeCamera& cam_a, const PoseSE3& pose_a,
                              const PinholeCamera& cam_b, const PoseSE3& pose_b,
                              const Vec2& px_a, const Vec2& px_b,
                              const TriangulationOptions& opts) {
  const auto pa = projection_matrix(cam_a, pose_a);
  const auto pb = projection_matrix(cam_b, pose_b);

  Eigen::Matrix4d a;
  a.row(0) = px_a.x() * pa.row(2) - pa.row(0);
  a.row(1) = px_a.y() * pa.row(2) - pa.row(1);
  a.row(2) = px_b.x() * pb.row(2) - pb.row(0);
  a.row(3) = px_b.y() * pb.row(2) - pb.row(1);

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  Eigen::Vector4d xh = svd.matrixV().col(3);
  if (std::abs(xh.w()) < 1e-15) return Fail::Degenerate;
  Landmark3 x = xh.head<3>() / xh.w();

  // One Gauss-Newton step on the reprojection error of the two views.
  for (int it = 0; it < 1; ++it) {
    Mat3 h = Mat3::Zero();
    Vec3 g = Vec3::Zero();
    const PinholeCamera* cams[2] = {&cam_a, &cam_b};
    const PoseSE3* poses[2] = {&pose_a, &pose_b};
    const Vec2 obs[2] = {px_a, px_b};
    for (int k = 0; k < 2; ++k) {
      const Vec3 pc = (*poses[k]) * x;
      if (pc.z() <= kDepthEpsilon) continue;
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dpi;
      dpi << cams[k]->fx * iz, 0, -cams[k]->fx * pc.x() * iz * iz, 0,
          cams[k]->fy * iz, -cams[k]->fy * pc.y() * iz * iz;
      const Eigen::Matrix<double, 2, 3> jac = dpi * poses[k]->rotation_matrix();
      const Vec2 r = cams[k]->project_point(pc) - obs[k];
      h += jac.transpose() * jac;
      g += jac.transpose() * r;
    }
    const Vec3 delta = h.ldlt().solve(-g);
    if (delta.allFinite()) x += delta;
  }

  if (parallax_deg(x, pose_a.center(), pose_b.center()) < opts.min_parallax_deg)
    return Fail::LowParallax;
  const Vec3 pca = pose_a * x;
  const Vec3 pcb = pose_b * x;
  if (pca.z() <= kDepthEpsilon || pcb.z() <= kDepthEpsilon)
    return Fail::NegativeDepth;
  const double ea = (cam_a.project_point(pca) - px_a).norm();
  const double eb = (cam_b.project_point(pcb) - px_b).norm();
  if (ea > opts.max_reproj_px || eb > opts.max_reproj_px)
    return Fail::HighReprojection;
  return x;
}

Result<PnPResult> solve_pnp_ransac(const PinholeCamera& camera,
                                   std::span<const Landmark3> points,
                                   std::span<const Vec2> pixels,
                                   const RansacOptions& opts) {
  const int n = static_cast<int>(points.size());
  if (n != static_cast<int>(pixels.size()) || n < 4)
    return Fail::InsufficientData;

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  PnPResult best;
  best.inlier_mask.assign(n, 0);
  double best_sq_sum = 0.0;
  std::vector<char> mask(n, 0);
  int required = opts.iterations;

  for (int it = 0; it < required && it < opts.iterations; ++it) {
    int i0 = pick(rng), i1 = pick(rng), i2 = pick(rng);
    if (i0 == i1 || i0 == i2 || i1 == i2) continue;
    const std::array<Vec3, 3> world = {points[i0], points[i1], points[i2]};
    const std::array<Vec3, 3> rays = {camera.bearing(pixels[i0]),
                                      camera.bearing(pixels[i1]),
                                      camera.bearing(pixels[i2])};
    for (const auto& depths : p3p_depths(world, rays)) {
      const std::array<Vec3, 3> cam_pts = {depths[0] * rays[0],
                                           depths[1] * rays[1],
                                           depths[2] * rays[2]};
      auto pose = absolute_orientation(world, cam_pts);
      if (!pose) continue;
      const auto st = score_pose(camera, *pose, points, pixels,
                                 opts.inlier_threshold_px, &mask);
      if (st.inliers > best.inlier_count ||
          (st.inliers == best.inlier_count &&
           st.sq_error_sum < best_sq_sum)) {
        best.inlier_count = st.inliers;
        best.pose = *pose;
        best.inlier_mask = mask;
        best_sq_sum = st.sq_error_sum;
        required = ransac_required_iterations(
            opts.confidence, static_cast<double>(st.inliers) / n, 3,
            opts.iterations);
      }
    }
  }

  if (best.inlier_count < std::max(opts.min_inliers, 4))
    return Fail::NoConsensus;

  best.pose = refine_pose_gauss_newton(camera, best.pose, points, pixels,
                                       best.inlier_mask, 10);
  const auto st = score_pose(camera, best.pose, points, pixels,
                             opts.inlier_threshold_px, &best.inlier_mask);
  best.inlier_count = st.inliers;
  if (best.inlier_count < std::max(opts.min_inliers, 4))
    return Fail::NoConsensus;
  return best;
}

namespace {

Mat3 essential_from_eight(std::span<const Vec3> ya, std::span<const Vec3> yb,
                          std::span<const int> idx) {
  Eigen::Matrix<double, Eigen::Dynamic, 9> a(idx.size(), 9);
  for (size_t k = 0; k < idx.size(); ++k) {
    const Vec3& p = ya[idx[k]];
    const Vec3& q = yb[idx[k]];
    a.row(k) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(),
        q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> e = svd.matrixV().col(8);
  Mat3 e0;
  e0 << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  // Project onto the essential manifold: singular values (1, 1, 0).
  Eigen::JacobiSVD<Mat3> esvd(e0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return esvd.matrixU() * Vec3(1, 1, 0).asDiagonal() *
         esvd.matrixV().transpose();
}

double sampson_error_sq(const Mat3& e, const Vec3& ya, const Vec3& yb) {
  const Vec3 ey = e * ya;
  const Vec3 ety = e.transpose() * yb;
  const double num = yb.dot(ey);
  const double den =
      ey.x() * ey.x() + ey.y() * ey.y() + ety.x() * ety.x() + ety.y() * ety.y();
  if (den < 1e-18) return 1e18;
  return num * num / den;
}

}  // namespace

Result<RelativePoseResult> solve_essential_ransac(
    std::span<const Vec2> pixels_a, std::span<const Vec2> pixels_b,
    const PinholeCamera& camera, const RansacOptions& opts) {
  const int n = static_cast<int>(pixels_a.size());
  if (n != static_cast<int>(pixels_b.size()) || n < 8)
    return Fail::InsufficientData;

  std::vector<Vec3> ya(n), yb(n);
  for (int i = 0; i < n; ++i) {
    ya[i] = Vec3((pixels_a[i].x() - camera.cx) / camera.fx,
                 (pixels_a[i].y() - camera.cy) / camera.fy, 1.0);
    yb[i] = Vec3((pixels_b[i].x() - camera.cx) / camera.fx,
                 (pixels_b[i].y() - camera.cy) / camera.fy, 1.0);
  }

  // Sampson error is computed in normalized coordinates; convert the pixel
  // threshold with the mean focal length.
  const double focal = 0.5 * (camera.fx + camera.fy);
  const double thr2 =
      (opts.inlier_threshold_px / focal) * (opts.inlier_threshold_px / focal);

  std::mt19937_64 rng(opts.seed);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);

  Mat3 best_e = Mat3::Zero();
  int best_inliers = 0;
  std::vector<char> best_mask(n, 0);
  int required = opts.iterations;

  for (int it = 0; it < required && it < opts.iterations; ++it) {
    for (int k = 0; k < 8; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(all[k], all[pick(rng)]);
    }
    const Mat3 e = essential_from_eight(ya, yb, std::span(all).first(8));
    int inliers = 0;
    std::vector<char> mask(n, 0);
    for (int i = 0; i < n; ++i) {
      if (sampson_error_sq(e, ya[i], yb[i]) <= thr2) {
        mask[i] = 1;
        ++inliers;
      }
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_e = e;
      best_mask = std::move(mask);
      required = ransac_required_iterations(
          opts.confidence, static_cast<double>(inliers) / n, 8,
          opts.iterations);
    }
  }

  if (best_inliers < std::max(opts.min_inliers, 8)) return Fail::Degenerate;

  // Re-estimate on all inliers for stability.
  std::vector<int> inlier_idx;
  for (int i = 0; i < n; ++i)
    if (best_mask[i]) inlier_idx.push_back(i);
  best_e = essential_from_eight(ya, yb, inlier_idx);

  // Decompose and pick the cheirality-positive combination.
  Eigen::JacobiSVD<Mat3> svd(best_e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0) u.col(2) *= -1;
  if (v.determinant() < 0) v.col(2) *= -1;
  Mat3 w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Mat3 r1 = u * w * v.transpose();
  const Mat3 r2 = u * w.transpose() * v.transpose();
  const Vec3 tu = u.col(2).normalized();

  const PoseSE3 pose_a = PoseSE3::identity();
  RelativePoseResult best_result;
  int best_good = -1;
  TriangulationOptions tri;
  tri.min_parallax_deg = 0.1;
  tri.max_reproj_px = 2.0 * opts.inlier_threshold_px;
  for (const Mat3& r : {r1, r2}) {
    for (const double sign : {1.0, -1.0}) {
      const PoseSE3 pose_b(Quat(r), sign * tu);
      int good = 0;
      std::vector<double> parallaxes;
      for (int i : inlier_idx) {
        auto x = triangulate(camera, pose_a, camera, pose_b, pixels_a[i],
                             pixels_b[i], tri);
        if (!x) continue;
        ++good;
        parallaxes.push_back(
            parallax_deg(*x, pose_a.center(), pose_b.center()));
      }
      if (good > best_good) {
        best_good = good;
        best_result.pose = pose_b;
        if (!parallaxes.empty()) {
          std::nth_element(parallaxes.begin(),
                           parallaxes.begin() + parallaxes.size() / 2,
                           parallaxes.end());
          best_result.median_parallax_deg = parallaxes[parallaxes.size() / 2];
        } else {
          best_result.median_parallax_deg = 0.0;
        }
      }
    }
  }

  // Pure rotation or bad geometry: triangulation fails for most inliers.
  if (best_good < std::max(opts.min_inliers, 8) ||
      best_good < best_inliers / 2 || best_result.median_parallax_deg < 0.5)
    return Fail::Degenerate;

  best_result.inlier_mask = std::move(best_mask);
  best_result.inlier_count = best_inliers;
  return best_result;
}

Result<PoseSim3> solve_sim3_umeyama(std::span<const Landmark3> src,
                                    std::span<const Landmark3> dst,
                                    bool with_scale) {
  const int n = static_cast<int>(src.size());
  if (n != static_cast<int>(dst.size()) || n < 3) return Fail::InsufficientData;

  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= n;
  mu_dst /= n;

  Mat3 sigma = Mat3::Zero();
  double var_src = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 a = src[i] - mu_src;
    const Vec3 b = dst[i] - mu_dst;
    sigma += b * a.transpose();
    var_src += a.squaredNorm();
  }
  sigma /= n;
  var_src /= n;

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  // Collinear sources leave the rotation about the line unobservable.
  if (d(1) <= 1e-12 * std::max(d(0), 1e-300)) return Fail::Degenerate;

  Vec3 s_fix = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0)
    s_fix(2) = -1;
  const Mat3 r =
      svd.matrixU() * s_fix.asDiagonal() * svd.matrixV().transpose();

  double scale = 1.0;
  if (with_scale) {
    if (var_src < 1e-300) return Fail::Degenerate;
    scale = d.dot(s_fix) / var_src;
    if (scale <= 0) return Fail::Degenerate;
  }
  const Vec3 t = mu_dst - scale * (r * mu_src);
  return PoseSim3(Quat(r), t, scale);
}

}  // namespace vslam
