#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "vslam/geometry.hpp"

using namespace vslam;
using namespace vslam::testutil;

TEST_CASE("project on optical axis") {
  PinholeCamera cam;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.0;
  cam.width = cam.height = 2;
  auto px = project(cam, PoseSE3::identity(), Landmark3(0, 0, 1));
  REQUIRE(px.ok());
  CHECK(px->x() == doctest::Approx(0.0));
  CHECK(px->y() == doctest::Approx(0.0));
}

TEST_CASE("project hand-evaluated pinhole formula") {
  PinholeCamera cam;
  cam.fx = 100.0;
  cam.fy = 120.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  auto px = project(cam, PoseSE3::identity(), Landmark3(1, 0, 2));
  REQUIRE(px.ok());
  // fx*x/z + cx = 100*0.5 + 320
  CHECK(px->x() == doctest::Approx(370.0));
  CHECK(px->y() == doctest::Approx(cam.cy));
}

TEST_CASE("project rejects zero and negative depth") {
  auto cam = default_camera();
  auto r0 = project(cam, PoseSE3::identity(), Landmark3(0.1, 0.2, 0.0));
  CHECK_FALSE(r0.ok());
  CHECK(r0.error() == Fail::BehindCamera);
  auto r1 = project(cam, PoseSE3::identity(), Landmark3(0.1, 0.2, -3.0));
  CHECK(r1.error() == Fail::BehindCamera);
}

TEST_CASE("SE3 compose/inverse group laws") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const PoseSE3 a = random_pose(rng, 5.0);
    const PoseSE3 b = random_pose(rng, 5.0);
    const PoseSE3 id = a * a.inverse();
    CHECK(so3_log(id.rotation()).norm() < 1e-9);
    CHECK(id.translation().norm() < 1e-9);
    CHECK(std::abs(a.rotation().norm() - 1.0) < 1e-9);

    // Associativity on a sample point.
    const Vec3 p = random_vec3(rng, 3.0);
    CHECK(((a * b) * p - a * (b * p)).norm() < 1e-9);

    // (a b)^-1 = b^-1 a^-1
    const PoseSE3 lhs = (a * b).inverse();
    const PoseSE3 rhs = b.inverse() * a.inverse();
    CHECK(lhs.rotation_angle_to(rhs) < 1e-9);
    CHECK(lhs.translation_distance_to(rhs) < 1e-9);
  }
}

TEST_CASE("Sim3 compose/inverse group laws") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> su(0.2, 5.0);
  for (int i = 0; i < 200; ++i) {
    const PoseSim3 a(random_rotation(rng), random_vec3(rng, 5.0), su(rng));
    const PoseSim3 b(random_rotation(rng), random_vec3(rng, 5.0), su(rng));
    const PoseSim3 id = a * a.inverse();
    CHECK(so3_log(id.rotation()).norm() < 1e-9);
    CHECK(id.translation().norm() < 1e-9);
    CHECK(std::abs(id.scale() - 1.0) < 1e-9);
    CHECK(a.scale() > 0);

    const Vec3 p = random_vec3(rng, 3.0);
    CHECK(((a * b) * p - a * (b * p)).norm() < 1e-8);
    CHECK((a.inverse() * (a * p) - p).norm() < 1e-8);
  }
}

TEST_CASE("project then backproject is identity") {
  std::mt19937_64 rng(9);
  const auto cam = default_camera();
  std::uniform_real_distribution<double> ux(0.0, cam.width - 1e-6);
  std::uniform_real_distribution<double> uy(0.0, cam.height - 1e-6);
  std::uniform_real_distribution<double> ud(0.05, 50.0);
  for (int i = 0; i < 500; ++i) {
    const PoseSE3 pose = random_pose(rng, 2.0);
    const Vec2 px(ux(rng), uy(rng));
    const double depth = ud(rng);
    const Landmark3 x = backproject(cam, pose, px, depth);
    auto back = project(cam, pose, x);
    REQUIRE(back.ok());
    CHECK((*back - px).norm() < 1e-9);
  }
}
