#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vslam/evaluation.hpp"
#include "vslam/features.hpp"
#include "vslam/geometry.hpp"
#include "vslam/result.hpp"

namespace vslam {

enum class TrajectoryKind { Line, Circle, SquareLoop, ShakeOverlay };

struct SceneNoise {
  double pixel_sigma = 0.0;
  double descriptor_sigma = 0.0;
  double outlier_rate = 0.0;
  // Couples detection confidence to pixel noise (low-confidence detections
  // are localized less precisely), which is what the confidence-weighted
  // bundle adjustment exploits. Harness knob, off by default.
  bool confidence_noise_coupling = false;
};

struct SceneSpec {
  int landmark_count = 500;
  TrajectoryKind trajectory = TrajectoryKind::Circle;
  int frame_count = 300;
  double frame_rate_hz = 20.0;
  double path_extent = 3.0;      // circle radius / square half-side / line length
  double landmark_extent = 6.0;  // radius of the landmark shell around the path
  double laps = 1.0;             // fraction of the closed path to traverse
  int descriptor_dim = 256;
  double confidence_mean = 0.7;
  double confidence_sigma = 0.1;
  double stereo_baseline = 0.11;
  PinholeCamera camera;  // zero-initialized: filled with the default rig
  SceneNoise noise;
};

struct SceneLandmark {
  Landmark3 position;
  Eigen::VectorXf descriptor;  // unit norm
};

enum class ChallengeKind { Lowlight, Shake, WeakTexture };

struct ChallengeInterval {
  ChallengeKind kind;
  int begin_frame = 0;
  int end_frame = 0;  // exclusive
};

struct SyntheticScene {
  SceneSpec spec;
  std::uint64_t seed = 0;
  std::vector<SceneLandmark> landmarks;
  TrajectoryEstimate trajectory;  // ground truth, world-to-camera
  std::vector<ChallengeInterval> challenges;
};

// Deterministic under seed; landmark descriptors kept pairwise separated
// (|cos| < 0.8) by rejection sampling.
Result<SyntheticScene> generate_scene(const SceneSpec& spec,
                                      std::uint64_t seed);

// Marks a frame interval with modified render parameters: lowlight scales
// confidences by 0.4, weak-texture drops 70% of the landmarks, shake applies
// render-only orientation jitter of up to 5 degrees per frame.
void script_challenge(SyntheticScene& scene, ChallengeKind kind,
                      int begin_frame, int end_frame);

// One synthetic detection: sub-cell position in detector-grid coordinates
// plus the (perturbed) descriptor.
struct Spike {
  double x = 0.0;  // detector grid coords, [0, W')
  double y = 0.0;
  float score = 0.f;
  int label = -1;  // landmark index, -1 for injected outliers
  Eigen::VectorXf descriptor;
};

struct SparseFrame {
  int grid_width = 0;
  int grid_height = 0;
  int descriptor_dim = 0;
  std::uint64_t background_seed = 0;
  float background_level = 0.01f;
  std::vector<Spike> spikes;
};

struct RenderedFrame {
  FeatureSet features;      // exact sub-pixel keypoints, original frame
  std::vector<int> labels;  // landmark index per feature, -1 for outliers
  SparseFrame detection;    // payload for the synthetic detector path
};

// Renders the trajectory frame, applying any scripted challenge intervals.
RenderedFrame render_frame(const SyntheticScene& scene, int frame_index);

// Renders an arbitrary pose; the per-frame noise stream is derived from the
// scene seed and the pose bits, so equal inputs give equal outputs.
RenderedFrame render_at(const SyntheticScene& scene, const PoseSE3& pose);

// Right-eye pose of a rectified stereo pair.
PoseSE3 stereo_right_pose(const PoseSE3& left, double baseline);

// Detector backend over staged synthetic detections. detect() materializes
// a dense score map (background plus Gaussian blobs at the spikes) and a
// procedural descriptor grid at full detector resolution.
class SyntheticDetector final : public DetectorBackend {
 public:
  std::string name() const override { return "synthetic"; }
  void stage(SparseFrame frame) { staged_ = std::move(frame); }
  Result<ScoreField> detect(const ImageF& resized_gray) override;

 private:
  SparseFrame staged_;
};

// Binary sparse-detection frame files (the synthetic dataset payload).
bool save_sparse_frame(const SparseFrame& frame, const std::string& path);
Result<SparseFrame> load_sparse_frame(const std::string& path);

// Writes the scene as an on-disk dataset in the EuRoC directory layout:
// mav0/cam0/data.csv, mav0/cam0/data/<ts>.feat and
// mav0/state_groundtruth_estimate0/data.csv.
bool export_scene_dataset(const SyntheticScene& scene, const std::string& root);

}  // namespace vslam
