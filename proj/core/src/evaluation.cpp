#include "vslam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vslam/multiview.hpp"

namespace vslam {

Result<std::vector<PairedSample>> associate(const TrajectoryEstimate& est,
                                            const TrajectoryEstimate& gt,
                                            double max_dt) {
  struct Cand {
    double dt;
    int i, j;
  };
  std::vector<Cand> cands;
  // Candidate pairs within the window, cheapest |dt| first, greedy one-to-one.
  int lo = 0;
  for (int i = 0; i < est.size(); ++i) {
    const double t = est.samples[i].timestamp;
    while (lo < gt.size() && gt.samples[lo].timestamp < t - max_dt) ++lo;
    for (int j = lo; j < gt.size() && gt.samples[j].timestamp <= t + max_dt;
         ++j) {
      cands.push_back({std::abs(gt.samples[j].timestamp - t), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dt != b.dt) return a.dt < b.dt;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<char> used_est(est.size(), 0), used_gt(gt.size(), 0);
  std::vector<std::pair<int, int>> chosen;
  for (const auto& c : cands) {
    if (used_est[c.i] || used_gt[c.j]) continue;
    used_est[c.i] = used_gt[c.j] = 1;
    chosen.emplace_back(c.i, c.j);
  }
  if (chosen.empty()) return Fail::EmptyOverlap;
  std::sort(chosen.begin(), chosen.end());
  std::vector<PairedSample> out;
  out.reserve(chosen.size());
  for (auto [i, j] : chosen)
    out.push_back({est.samples[i], gt.samples[j]});
  return out;
}

Result<std::vector<PairedSample>> align(std::vector<PairedSample> pairs,
                                        AlignMode mode) {
  if (mode == AlignMode::None) return pairs;
  if (pairs.size() < 3) return Fail::InsufficientData;
  std::vector<Landmark3> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& p : pairs) {
    src.push_back(p.est.pose.center());
    dst.push_back(p.gt.pose.center());
  }
  auto sim = solve_sim3_umeyama(src, dst, mode == AlignMode::Sim3);
  if (!sim) return sim.error();
  for (auto& p : pairs) {
    // Move the estimated pose into the ground-truth frame: the camera center
    // maps through the similarity, the orientation through its rotation.
    const Vec3 c = *sim * p.est.pose.center();
    const Quat r = p.est.pose.rotation() * sim->rotation().conjugate();
    p.est.pose = PoseSE3(r, -(r * c));
  }
  return pairs;
}

double ate_rmse(const std::vector<PairedSample>& pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs)
    sum += (p.gt.pose.center() - p.est.pose.center()).squaredNorm();
  return std::sqrt(sum / pairs.size());
}

double ate_std(const std::vector<PairedSample>& pairs) {
  if (pairs.empty()) return 0.0;
  double mean = 0.0, sq = 0.0;
  for (const auto& p : pairs) {
    const double e = (p.gt.pose.center() - p.est.pose.center()).norm();
    mean += e;
    sq += e * e;
  }
  mean /= pairs.size();
  sq /= pairs.size();
  return std::sqrt(std::max(0.0, sq - mean * mean));
}

Result<RpeStats> rpe_rmse(const std::vector<PairedSample>& pairs,
                          int delta_frames) {
  const int n = static_cast<int>(pairs.size());
  if (delta_frames < 1 || n <= delta_frames) return Fail::TooShortTrajectory;
  double t_sum = 0, t_sq = 0, r_sum = 0, r_sq = 0;
  const int count = n - delta_frames;
  for (int i = 0; i < count; ++i) {
    // Relative motion in the frame of sample i; stored poses are
    // world-to-camera, so T_i^-1 T_{i+d} = P_i P_{i+d}^-1.
    const PoseSE3 rel_gt =
        pairs[i].gt.pose * pairs[i + delta_frames].gt.pose.inverse();
    const PoseSE3 rel_est =
        pairs[i].est.pose * pairs[i + delta_frames].est.pose.inverse();
    const PoseSE3 err = rel_gt.inverse() * rel_est;
    const double te = err.translation().norm();
    const double re = so3_log(err.rotation()).norm();
    t_sum += te;
    t_sq += te * te;
    r_sum += re;
    r_sq += re * re;
  }
  RpeStats st;
  st.translation_rmse = std::sqrt(t_sq / count);
  st.rotation_rmse = std::sqrt(r_sq / count);
  const double tm = t_sum / count, rm = r_sum / count;
  st.translation_std = std::sqrt(std::max(0.0, t_sq / count - tm * tm));
  st.rotation_std = std::sqrt(std::max(0.0, r_sq / count - rm * rm));
  return st;
}

std::vector<double> per_frame_errors(const std::vector<PairedSample>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    out.push_back((p.gt.pose.center() - p.est.pose.center()).norm());
  return out;
}

Result<TrajectoryEstimate> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Fail::BackendFailure;
  TrajectoryEstimate traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) continue;
    // File stores camera-to-world (position + orientation); poses are kept
    // world-to-camera internally.
    const Quat q(qw, qx, qy, qz);
    const PoseSE3 cam_to_world(q, Vec3(tx, ty, tz));
    traj.push(t, cam_to_world.inverse());
  }
  if (traj.empty()) return Fail::EmptyOverlap;
  return traj;
}

bool save_trajectory(const TrajectoryEstimate& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) return false;
  out.precision(17);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& s : traj.samples) {
    const PoseSE3 cam_to_world = s.pose.inverse();
    const Quat& q = cam_to_world.rotation();
    const Vec3& t = cam_to_world.translation();
    out << s.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  return static_cast<bool>(out);
}

Result<TrajectoryEstimate> load_groundtruth_csv(const std::string& path,
                                                bool scalar_first) {
  std::ifstream in(path);
  if (!in) return Fail::BackendFailure;
  TrajectoryEstimate traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    double ts, px, py, pz, qa, qb, qc, qd;
    if (!(ss >> ts >> px >> py >> pz >> qa >> qb >> qc >> qd)) continue;
    const Quat q = scalar_first ? Quat(qa, qb, qc, qd) : Quat(qd, qa, qb, qc);
    const PoseSE3 body_to_world(q, Vec3(px, py, pz));
    traj.push(ts * 1e-9, body_to_world.inverse());
  }
  if (traj.empty()) return Fail::EmptyOverlap;
  return traj;
}

}  // namespace vslam
