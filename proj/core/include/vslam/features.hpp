#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vslam/geometry.hpp"
#include "vslam/image.hpp"
#include "vslam/result.hpp"

namespace vslam {

// Grid of per-cell descriptors backing interpolation. Dense for neural
// detectors; the synthetic detector uses a procedural implementation.
class DescriptorGrid {
 public:
  virtual ~DescriptorGrid() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual int dim() const = 0;
  virtual void cell(int row, int col, std::span<float> out) const = 0;
};

class DenseDescriptorGrid final : public DescriptorGrid {
 public:
  DenseDescriptorGrid(int width, int height, int dim)
      : width_(width), height_(height), dim_(dim),
        data_(static_cast<size_t>(width) * height * dim, 0.f) {}

  int width() const override { return width_; }
  int height() const override { return height_; }
  int dim() const override { return dim_; }
  void cell(int row, int col, std::span<float> out) const override;
  std::span<float> mutable_cell(int row, int col);

 private:
  int width_, height_, dim_;
  std::vector<float> data_;
};

// Raw detector output: confidence in [0,1] per cell of the resized frame
// plus the descriptor grid (possibly at a coarser resolution).
struct ScoreField {
  ImageF scores;  // height rows x width cols
  std::shared_ptr<const DescriptorGrid> descriptors;

  bool empty() const { return scores.empty(); }
};

// Filtered per-image features in original-image pixel coordinates.
struct FeatureSet {
  int image_width = 0;
  int image_height = 0;
  std::vector<Vec2> keypoints;
  std::vector<float> scores;
  // One unit-norm descriptor per row.
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      descriptors;

  int size() const { return static_cast<int>(keypoints.size()); }
  bool empty() const { return keypoints.empty(); }
};

struct AdaptiveThresholdState {
  double mu1 = 0.1;
  double mu2 = 0.01;
  int last_match_count = 0;
  int resized_width = 400;
  int resized_height = 300;
};

struct ScoreCandidate {
  int row = 0;
  int col = 0;
  float score = 0.f;
};

// th = E + sqrt(var)/2 + mu1 / (1 + exp(-mu2 * m)) over all cells.
double compute_adaptive_threshold(const ScoreField& field,
                                  const AdaptiveThresholdState& state);

// Keeps cells with score strictly above th, then suppresses non-maxima
// within the given radius (Euclidean, in cells).
std::vector<ScoreCandidate> filter_scores(const ScoreField& field, double th,
                                          int nms_radius = 4);

// Maps keypoints from the resized frame to original-image pixels: x scaled
// by W/W', y by H/H', clamped to [0, W-1] x [0, H-1].
std::vector<Vec2> rescale_keypoints(std::span<const Vec2> keypoints,
                                    int resized_width, int resized_height,
                                    const PinholeCamera& camera);

// Bicubic (Catmull-Rom) interpolation of the descriptor grid at resized-frame
// pixel coordinates, followed by L2 normalization.
void sample_descriptor(const DescriptorGrid& grid, double x, double y,
                       int resized_width, int resized_height,
                       std::span<float> out);

// Sub-cell refinement of a score peak via a log-parabola fit on the 3x3
// neighborhood; returns (x, y) in score-grid coordinates.
Vec2 refine_peak(const ImageF& scores, int row, int col);

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  virtual Result<ScoreField> detect(const ImageF& resized_gray) = 0;
};

struct FeatureExtractorOptions {
  int nms_radius = 4;
  bool adaptive_threshold = true;
  double fixed_threshold = 0.5;  // used when adaptive_threshold is off
};

// Detection pipeline: backend inference, thresholding, NMS, descriptor
// lookup, rescale to the original frame.
class FeatureExtractor {
 public:
  FeatureExtractor(std::shared_ptr<DetectorBackend> backend,
                   FeatureExtractorOptions options = {})
      : backend_(std::move(backend)), options_(options) {}

  Result<FeatureSet> extract(const ImageF& image, const PinholeCamera& camera,
                             const AdaptiveThresholdState& state) const;

  // Same pipeline on an already-computed field (tests, replayed datasets).
  FeatureSet extract_from_field(const ScoreField& field,
                                const PinholeCamera& camera,
                                const AdaptiveThresholdState& state) const;

  DetectorBackend& backend() { return *backend_; }
  const FeatureExtractorOptions& options() const { return options_; }

 private:
  std::shared_ptr<DetectorBackend> backend_;
  FeatureExtractorOptions options_;
};

}  // namespace vslam
