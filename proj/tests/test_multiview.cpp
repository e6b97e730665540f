#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "test_util.hpp"
#include "vslam/multiview.hpp"

using namespace vslam;
using namespace vslam::testutil;

TEST_CASE("triangulate recovers a forward-projected point") {
  const auto cam = default_camera();
  const PoseSE3 pose_a = PoseSE3::identity();
  const PoseSE3 pose_b(Quat::Identity(), Vec3(-0.4, 0, 0));
  const Landmark3 x(0.3, -0.2, 4.0);
  const Vec2 pa = *project(cam, pose_a, x);
  const Vec2 pb = *project(cam, pose_b, x);
  auto rec = triangulate(cam, pose_a, cam, pose_b, pa, pb);
  REQUIRE(rec.ok());
  CHECK((*rec - x).norm() < 1e-6);
}

TEST_CASE("triangulate with identical poses fails on parallax") {
  const auto cam = default_camera();
  const PoseSE3 pose = PoseSE3::identity();
  auto rec = triangulate(cam, pose, cam, pose, Vec2(320, 240), Vec2(322, 240));
  REQUIRE_FALSE(rec.ok());
  CHECK(rec.error() == Fail::LowParallax);
}

TEST_CASE("triangulate flags a point behind both cameras") {
  // Pixels computed from the raw pinhole formula for a mirrored point with
  // z = -5; the rays meet exactly there, so the solver must report depth < 0.
  const auto cam = default_camera();
  const PoseSE3 pose_a = PoseSE3::identity();
  const PoseSE3 pose_b(Quat::Identity(), Vec3(-0.5, 0, 0));
  const double z = -5.0, x = 0.4, y = 0.2;
  const Vec2 pa(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);
  // In B's frame the point is (x - 0.5... ) rather: p_b = p + t_b.
  const double xb = x - 0.5;
  const Vec2 pb(cam.fx * xb / z + cam.cx, cam.fy * y / z + cam.cy);
  auto rec = triangulate(cam, pose_a, cam, pose_b, pa, pb);
  REQUIRE_FALSE(rec.ok());
  CHECK(rec.error() == Fail::NegativeDepth);
}

TEST_CASE("triangulate(project(X)) = X property") {
  std::mt19937_64 rng(21);
  const auto cam = default_camera();
  std::uniform_real_distribution<double> ub(0.2, 1.0);
  int tested = 0;
  while (tested < 200) {
    const PoseSE3 pose_a = random_pose(rng, 0.5);
    PoseSE3 pose_b(pose_a.rotation(),
                   pose_a.translation() + Vec3(ub(rng), 0, 0));
    const Landmark3 x =
        pose_a.inverse() * Vec3(std::uniform_real_distribution<double>(
                                    -1.0, 1.0)(rng),
                                std::uniform_real_distribution<double>(
                                    -0.7, 0.7)(rng),
                                std::uniform_real_distribution<double>(
                                    2.0, 8.0)(rng));
    auto pa = project(cam, pose_a, x);
    auto pb = project(cam, pose_b, x);
    if (!pa || !pb || !cam.contains(*pa) || !cam.contains(*pb)) continue;
    auto rec = triangulate(cam, pose_a, cam, pose_b, *pa, *pb);
    if (!rec) {
      CHECK(rec.error() == Fail::LowParallax);
      continue;
    }
    CHECK((*rec - x).norm() < 1e-6);
    ++tested;
  }
}

namespace {

struct PnPScene {
  std::vector<Landmark3> points;
  std::vector<Vec2> pixels;
  PoseSE3 pose;
};

PnPScene make_pnp_scene(std::mt19937_64& rng, const PinholeCamera& cam,
                        int count) {
  PnPScene sc;
  sc.pose = PoseSE3(random_rotation(rng), Vec3(0.1, -0.2, 0.3));
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::uniform_real_distribution<double> uz(2.0, 10.0);
  while (static_cast<int>(sc.points.size()) < count) {
    const Vec3 p_cam(ux(rng), 0.75 * ux(rng), uz(rng));
    const Landmark3 x = sc.pose.inverse() * p_cam;
    auto px = project(cam, sc.pose, x);
    if (!px || !cam.contains(*px)) continue;
    sc.points.push_back(x);
    sc.pixels.push_back(*px);
  }
  return sc;
}

}  // namespace

TEST_CASE("pnp ransac on exact correspondences") {
  std::mt19937_64 rng(31);
  const auto cam = default_camera();
  auto sc = make_pnp_scene(rng, cam, 50);
  auto res = solve_pnp_ransac(cam, sc.points, sc.pixels);
  REQUIRE(res.ok());
  CHECK(res->pose.rotation_angle_to(sc.pose) < 1e-4);
  CHECK(res->pose.translation_distance_to(sc.pose) < 1e-4);
  CHECK(res->inlier_count == 50);
}

TEST_CASE("pnp ransac with 40 percent gross outliers") {
  std::mt19937_64 rng(32);
  const auto cam = default_camera();
  auto sc = make_pnp_scene(rng, cam, 50);
  std::uniform_real_distribution<double> ux(0.0, cam.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, cam.height - 1.0);
  std::vector<char> is_outlier(50, 0);
  for (int i = 0; i < 20; ++i) {
    is_outlier[i] = 1;
    sc.pixels[i] = Vec2(ux(rng), uy(rng)) + Vec2(50, 50);  // gross corruption
  }
  auto res = solve_pnp_ransac(cam, sc.points, sc.pixels);
  REQUIRE(res.ok());
  CHECK(res->pose.rotation_angle_to(sc.pose) < 1e-3);
  CHECK(res->pose.translation_distance_to(sc.pose) < 1e-3);
  int flagged = 0;
  for (int i = 0; i < 50; ++i)
    if (is_outlier[i] && !res->inlier_mask[i]) ++flagged;
  CHECK(flagged >= 19);  // at most one corrupted pixel may land back inside
}

TEST_CASE("pnp ransac under-determined") {
  const auto cam = default_camera();
  std::vector<Landmark3> pts = {{0, 0, 5}, {1, 0, 5}, {0, 1, 5}};
  std::vector<Vec2> pxs = {{320, 240}, {400, 240}, {320, 300}};
  auto res = solve_pnp_ransac(cam, pts, pxs);
  REQUIRE_FALSE(res.ok());
  CHECK(res.error() == Fail::InsufficientData);
}

TEST_CASE("essential ransac recovers relative pose up to scale") {
  std::mt19937_64 rng(41);
  const auto cam = default_camera();
  const PoseSE3 pose_a = PoseSE3::identity();
  const Vec3 t_true = Vec3(0.2, 0.0, 0.02).normalized() * 0.2;
  const Quat r_true = so3_exp(Vec3(0.02, -0.05, 0.01));
  const PoseSE3 pose_b(r_true, t_true);

  std::vector<Vec2> pa, pb;
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::uniform_real_distribution<double> uz(3.0, 12.0);
  while (pa.size() < 100) {
    const Landmark3 x(ux(rng), 0.7 * ux(rng), uz(rng));
    auto a = project(cam, pose_a, x);
    auto b = project(cam, pose_b, x);
    if (!a || !b || !cam.contains(*a) || !cam.contains(*b)) continue;
    pa.push_back(*a);
    pb.push_back(*b);
  }
  auto res = solve_essential_ransac(pa, pb, cam);
  REQUIRE(res.ok());
  CHECK(std::abs(res->pose.translation().norm() - 1.0) < 1e-9);
  CHECK(res->pose.rotation_angle_to(PoseSE3(r_true, Vec3::Zero())) < 1e-3);
  const double dir_err = std::acos(std::clamp(
      res->pose.translation().dot(t_true.normalized()), -1.0, 1.0));
  CHECK(dir_err < 1e-3);
}

TEST_CASE("essential ransac zero baseline is degenerate") {
  std::mt19937_64 rng(42);
  const auto cam = default_camera();
  const PoseSE3 pose = PoseSE3::identity();
  const Quat r = so3_exp(Vec3(0, 0.03, 0));
  const PoseSE3 pose_b(r, Vec3::Zero());  // pure rotation
  std::vector<Vec2> pa, pb;
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::uniform_real_distribution<double> uz(3.0, 12.0);
  while (pa.size() < 60) {
    const Landmark3 x(ux(rng), 0.7 * ux(rng), uz(rng));
    auto a = project(cam, pose, x);
    auto b = project(cam, pose_b, x);
    if (!a || !b || !cam.contains(*a) || !cam.contains(*b)) continue;
    pa.push_back(*a);
    pb.push_back(*b);
  }
  auto res = solve_essential_ransac(pa, pb, cam);
  REQUIRE_FALSE(res.ok());
  CHECK(res.error() == Fail::Degenerate);
}

TEST_CASE("essential ransac needs eight correspondences") {
  const auto cam = default_camera();
  std::vector<Vec2> pa(7, Vec2(100, 100)), pb(7, Vec2(110, 100));
  auto res = solve_essential_ransac(pa, pb, cam);
  REQUIRE_FALSE(res.ok());
  CHECK(res.error() == Fail::InsufficientData);
}

TEST_CASE("umeyama recovers a known similarity") {
  std::mt19937_64 rng(51);
  const double s = 2.0;
  const Quat r = so3_exp(Vec3(0, 0, M_PI / 2));
  const Vec3 t(1, 0, 0);
  const PoseSim3 truth(r, t, s);
  std::vector<Landmark3> src, dst;
  for (int i = 0; i < 10; ++i) {
    src.push_back(random_vec3(rng, 3.0));
    dst.push_back(truth * src.back());
  }
  auto rec = solve_sim3_umeyama(src, dst, true);
  REQUIRE(rec.ok());
  CHECK(std::abs(rec->scale() - s) < 1e-9);
  CHECK(so3_log(rec->rotation().conjugate() * r).norm() < 1e-9);
  CHECK((rec->translation() - t).norm() < 1e-9);
}

TEST_CASE("umeyama on identical sets is identity") {
  std::mt19937_64 rng(52);
  std::vector<Landmark3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(random_vec3(rng, 2.0));
  auto rec = solve_sim3_umeyama(pts, pts, true);
  REQUIRE(rec.ok());
  CHECK(std::abs(rec->scale() - 1.0) < 1e-9);
  CHECK(so3_log(rec->rotation()).norm() < 1e-9);
  CHECK(rec->translation().norm() < 1e-9);
}

TEST_CASE("umeyama rejects collinear points") {
  std::vector<Landmark3> src = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  std::vector<Landmark3> dst = {{0, 0, 0}, {0, 1, 0}, {0, 2, 0}};
  auto rec = solve_sim3_umeyama(src, dst, true);
  REQUIRE_FALSE(rec.ok());
  CHECK(rec.error() == Fail::Degenerate);
}

TEST_CASE("umeyama equivariance under pre-rotation") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Landmark3> src, dst;
    const PoseSim3 truth(random_rotation(rng), random_vec3(rng, 2.0), 1.5);
    for (int i = 0; i < 12; ++i) {
      src.push_back(random_vec3(rng, 3.0));
      dst.push_back(truth * src.back());
    }
    const Quat q = random_rotation(rng);
    std::vector<Landmark3> src_q, dst_q;
    for (int i = 0; i < 12; ++i) {
      src_q.push_back(q * src[i]);
      dst_q.push_back(q * dst[i]);
    }
    auto plain = solve_sim3_umeyama(src, dst, true);
    auto rotated = solve_sim3_umeyama(src_q, dst_q, true);
    REQUIRE(plain.ok());
    REQUIRE(rotated.ok());
    // Recovered rotation must be conjugated by q.
    const Quat expect = q * plain->rotation() * q.conjugate();
    CHECK(so3_log(rotated->rotation().conjugate() * expect).norm() < 1e-8);
    CHECK(std::abs(rotated->scale() - plain->scale()) < 1e-9);
  }
}
