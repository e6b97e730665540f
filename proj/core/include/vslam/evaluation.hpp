#pragma once

#include <string>
#include <vector>

#include "vslam/geometry.hpp"
#include "vslam/result.hpp"

namespace vslam {

struct TrajectorySample {
  double timestamp = 0.0;  // seconds
  PoseSE3 pose;
};

// Time-ordered pose samples; timestamps strictly increasing.
struct TrajectoryEstimate {
  std::vector<TrajectorySample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  bool empty() const { return samples.empty(); }
  void push(double timestamp, const PoseSE3& pose) {
    samples.push_back({timestamp, pose});
  }
};

struct PairedSample {
  TrajectorySample est;
  TrajectorySample gt;
};

// Greedy nearest-timestamp one-to-one pairing with |dt| <= max_dt.
Result<std::vector<PairedSample>> associate(const TrajectoryEstimate& est,
                                            const TrajectoryEstimate& gt,
                                            double max_dt = 0.02);

enum class AlignMode { None, SE3, Sim3 };

// Umeyama alignment of estimated positions onto ground truth; applies the
// recovered transform to the estimated side of each pair.
Result<std::vector<PairedSample>> align(std::vector<PairedSample> pairs,
                                        AlignMode mode);

// RMSE of the positional error over paired frames.
double ate_rmse(const std::vector<PairedSample>& pairs);

// Standard deviation of the per-frame positional error.
double ate_std(const std::vector<PairedSample>& pairs);

struct RpeStats {
  double translation_rmse = 0.0;  // meters
  double rotation_rmse = 0.0;     // radians
  double translation_std = 0.0;
  double rotation_std = 0.0;
};

// Relative-pose error over a fixed frame delta.
Result<RpeStats> rpe_rmse(const std::vector<PairedSample>& pairs,
                          int delta_frames = 1);

// Per-pair positional errors, e.g. for CSV reports.
std::vector<double> per_frame_errors(const std::vector<PairedSample>& pairs);

// Trajectory file: "timestamp tx ty tz qx qy qz qw" per line (quaternion
// scalar-last, seconds); '#' lines ignored.
Result<TrajectoryEstimate> load_trajectory(const std::string& path);
bool save_trajectory(const TrajectoryEstimate& traj, const std::string& path);

// EuRoC-style ground truth CSV: "#timestamp [ns], p_x, p_y, p_z, q_w, q_x,
// q_y, q_z, ..." with nanosecond timestamps. scalar_first=false reads the
// TUM-VI mocap field order (q_x q_y q_z q_w).
Result<TrajectoryEstimate> load_groundtruth_csv(const std::string& path,
                                                bool scalar_first = true);

}  // namespace vslam
