#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_util.hpp"
#include "vslam/evaluation.hpp"

using namespace vslam;
using namespace vslam::testutil;

namespace {

// Pose whose camera center is the given world position.
PoseSE3 pose_at(const Vec3& center, const Quat& q = Quat::Identity()) {
  return {q, -(q * center)};
}

TrajectoryEstimate line_trajectory(int n, double dt = 0.1,
                                   const Vec3& step = Vec3(0.1, 0, 0)) {
  TrajectoryEstimate t;
  for (int i = 0; i < n; ++i) t.push(i * dt, pose_at(step * i));
  return t;
}

TrajectoryEstimate arc_trajectory(int n, double dt = 0.1) {
  TrajectoryEstimate t;
  for (int i = 0; i < n; ++i) {
    const double a = 0.2 * i;
    t.push(i * dt, pose_at(Vec3(std::cos(a), std::sin(a), 0.05 * i)));
  }
  return t;
}

}  // namespace

TEST_CASE("associate identical timestamp sets fully") {
  auto est = line_trajectory(20);
  auto gt = line_trajectory(20);
  auto pairs = associate(est, gt);
  REQUIRE(pairs.ok());
  CHECK(pairs->size() == 20);
}

TEST_CASE("associate disjoint time ranges is empty-overlap") {
  auto est = line_trajectory(10);
  TrajectoryEstimate gt;
  for (int i = 0; i < 10; ++i) gt.push(100.0 + i * 0.1, pose_at(Vec3::Zero()));
  auto pairs = associate(est, gt);
  REQUIRE_FALSE(pairs.ok());
  CHECK(pairs.error() == Fail::EmptyOverlap);
}

TEST_CASE("associate jittered timestamps matches optimal assignment") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> jitter(-0.008, 0.008);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(trial % 5);
    auto est = line_trajectory(n);
    TrajectoryEstimate gt;
    for (int i = 0; i < n; ++i)
      gt.push(i * 0.1 + jitter(rng), pose_at(Vec3(0.1 * i, 0, 0)));
    auto pairs = associate(est, gt, 0.02);
    REQUIRE(pairs.ok());
    // With jitter below half the spacing the optimal assignment is the
    // diagonal, so greedy must recover the full diagonal pairing.
    REQUIRE(pairs->size() == n);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(pairs->at(i).est.timestamp - i * 0.1) < 1e-12);
  }
}

TEST_CASE("ate_rmse tagged examples") {
  // Identical trajectories -> 0.
  std::vector<PairedSample> same;
  for (int i = 0; i < 5; ++i) {
    TrajectorySample s{0.1 * i, pose_at(Vec3(i, 0, 0))};
    same.push_back({s, s});
  }
  CHECK(ate_rmse(same) == 0.0);

  // Single pair offset by (3,4,0) -> 5.
  std::vector<PairedSample> offset = {
      {{0.0, pose_at(Vec3(3, 4, 0))}, {0.0, pose_at(Vec3(0, 0, 0))}}};
  CHECK(ate_rmse(offset) == doctest::Approx(5.0).epsilon(1e-12));

  // Errors 0 and 2 -> sqrt(2).
  std::vector<PairedSample> two = {
      {{0.0, pose_at(Vec3(0, 0, 0))}, {0.0, pose_at(Vec3(0, 0, 0))}},
      {{0.1, pose_at(Vec3(2, 0, 0))}, {0.1, pose_at(Vec3(0, 0, 0))}}};
  CHECK(ate_rmse(two) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("se3 alignment removes a rigid offset exactly") {
  std::mt19937_64 rng(62);
  const Quat r = random_rotation(rng);
  const Vec3 t = random_vec3(rng, 2.0);
  auto gt = arc_trajectory(30);
  TrajectoryEstimate est;
  for (const auto& s : gt.samples) {
    const Vec3 c = r * s.pose.center() + t;
    est.push(s.timestamp, pose_at(c, s.pose.rotation() * r.conjugate()));
  }
  auto pairs = associate(est, gt);
  REQUIRE(pairs.ok());
  CHECK(ate_rmse(*pairs) > 0.1);
  auto aligned = align(*pairs, AlignMode::SE3);
  REQUIRE(aligned.ok());
  CHECK(ate_rmse(*aligned) < 1e-9);

  auto none = align(*pairs, AlignMode::None);
  REQUIRE(none.ok());
  CHECK(ate_rmse(*none) == ate_rmse(*pairs));
}

TEST_CASE("sim3 alignment recovers scale, se3 cannot") {
  auto gt = arc_trajectory(30);
  TrajectoryEstimate est;
  for (const auto& s : gt.samples)
    est.push(s.timestamp, pose_at(2.0 * s.pose.center(), s.pose.rotation()));
  auto pairs = associate(est, gt);
  REQUIRE(pairs.ok());
  auto sim3 = align(*pairs, AlignMode::Sim3);
  REQUIRE(sim3.ok());
  CHECK(ate_rmse(*sim3) < 1e-9);
  auto se3 = align(*pairs, AlignMode::SE3);
  REQUIRE(se3.ok());
  CHECK(ate_rmse(*se3) > 1e-3);
}

TEST_CASE("alignment nesting inequality on random trajectories") {
  std::mt19937_64 rng(63);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    TrajectoryEstimate gt, est;
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < 15; ++i) {
      p += random_vec3(rng, 0.3);
      gt.push(i * 0.1, pose_at(p, random_rotation(rng)));
      est.push(i * 0.1,
               pose_at(1.3 * p + Vec3(noise(rng), noise(rng), noise(rng)),
                       random_rotation(rng)));
    }
    auto pairs = associate(est, gt);
    REQUIRE(pairs.ok());
    const double none = ate_rmse(*pairs);
    auto se3 = align(*pairs, AlignMode::SE3);
    auto sim3 = align(*pairs, AlignMode::Sim3);
    REQUIRE(se3.ok());
    REQUIRE(sim3.ok());
    CHECK(ate_rmse(*se3) <= none + 1e-9);
    CHECK(ate_rmse(*sim3) <= ate_rmse(*se3) + 1e-9);
    // std^2 <= mean-square error
    const double st = ate_std(*pairs);
    CHECK(st * st <= none * none + 1e-12);
  }
}

TEST_CASE("ate invariance under common rigid transform") {
  std::mt19937_64 rng(64);
  auto gt = arc_trajectory(20);
  TrajectoryEstimate est;
  std::normal_distribution<double> noise(0.0, 0.05);
  for (const auto& s : gt.samples)
    est.push(s.timestamp,
             pose_at(s.pose.center() + Vec3(noise(rng), noise(rng), noise(rng))));
  auto pairs = associate(est, gt);
  const double base = ate_rmse(*pairs);

  const Quat r = random_rotation(rng);
  const Vec3 t = random_vec3(rng, 3.0);
  TrajectoryEstimate gt2, est2;
  for (const auto& s : gt.samples)
    gt2.push(s.timestamp, pose_at(r * s.pose.center() + t, s.pose.rotation() * r.conjugate()));
  for (const auto& s : est.samples)
    est2.push(s.timestamp, pose_at(r * s.pose.center() + t, s.pose.rotation() * r.conjugate()));
  auto pairs2 = associate(est2, gt2);
  CHECK(ate_rmse(*pairs2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("rpe trivial and corrupted-pose cases") {
  auto gt = line_trajectory(10);
  auto pairs_same = associate(gt, gt);
  auto same = rpe_rmse(*pairs_same, 1);
  REQUIRE(same.ok());
  CHECK(same->translation_rmse == 0.0);
  CHECK(same->rotation_rmse == 0.0);

  // Constant global offset cancels in relative error.
  TrajectoryEstimate est;
  for (const auto& s : gt.samples)
    est.push(s.timestamp, pose_at(s.pose.center() + Vec3(5, -2, 1)));
  auto pairs_off = associate(est, gt);
  auto off = rpe_rmse(*pairs_off, 1);
  REQUIRE(off.ok());
  CHECK(off->translation_rmse < 1e-12);
  CHECK(off->rotation_rmse < 1e-12);

  // One corrupted pose: residuals at exactly the two affected deltas.
  TrajectoryEstimate corrupted = gt;
  const Vec3 bump(0.3, 0, 0);
  corrupted.samples[5].pose = pose_at(gt.samples[5].pose.center() + bump);
  auto pairs_c = associate(corrupted, gt);
  auto rc = rpe_rmse(*pairs_c, 1);
  REQUIRE(rc.ok());
  // Hand-computed: 9 deltas, two with translation error 0.3.
  const double expect = std::sqrt((2 * 0.3 * 0.3) / 9.0);
  CHECK(rc->translation_rmse == doctest::Approx(expect).epsilon(1e-9));
  CHECK(rc->rotation_rmse < 1e-12);

  auto too_short = rpe_rmse(*pairs_same, 20);
  REQUIRE_FALSE(too_short.ok());
  CHECK(too_short.error() == Fail::TooShortTrajectory);
}

TEST_CASE("trajectory file round trip") {
  std::mt19937_64 rng(65);
  TrajectoryEstimate traj;
  for (int i = 0; i < 25; ++i)
    traj.push(0.05 * i, random_pose(rng, 2.0));
  const auto path = std::filesystem::temp_directory_path() / "vslam_traj_test.txt";
  REQUIRE(save_trajectory(traj, path.string()));
  auto loaded = load_trajectory(path.string());
  REQUIRE(loaded.ok());
  REQUIRE(loaded->size() == traj.size());
  for (int i = 0; i < traj.size(); ++i) {
    CHECK(std::abs(loaded->samples[i].timestamp - traj.samples[i].timestamp) <
          1e-12);
    CHECK(loaded->samples[i].pose.rotation_angle_to(traj.samples[i].pose) <
          1e-12);
    CHECK(loaded->samples[i].pose.translation_distance_to(
              traj.samples[i].pose) < 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("euroc ground-truth csv ingestion converts ns to s") {
  const auto path = std::filesystem::temp_directory_path() / "vslam_gt_test.csv";
  {
    std::ofstream out(path);
    out << "#timestamp [ns], p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], "
           "q_RS_w [], q_RS_x [], q_RS_y [], q_RS_z []\n";
    out << "1403636579763555584,4.688,-1.786,0.783,0.534,-0.153,-0.827,-0.082\n";
    out << "1403636579768555520,4.689,-1.785,0.784,0.535,-0.152,-0.826,-0.083\n";
  }
  auto gt = load_groundtruth_csv(path.string(), true);
  REQUIRE(gt.ok());
  REQUIRE(gt->size() == 2);
  CHECK(gt->samples[0].timestamp == doctest::Approx(1403636579.763555584));
  CHECK((gt->samples[0].pose.center() - Vec3(4.688, -1.786, 0.783)).norm() <
        1e-9);
  std::filesystem::remove(path);
}
