#include "vslam/features.hpp"

#include <algorithm>
#include <cmath>

namespace vslam {

void DenseDescriptorGrid::cell(int row, int col, std::span<float> out) const {
  const size_t base =
      (static_cast<size_t>(row) * width_ + col) * static_cast<size_t>(dim_);
  std::copy_n(data_.begin() + base, dim_, out.begin());
}

std::span<float> DenseDescriptorGrid::mutable_cell(int row, int col) {
  const size_t base =
      (static_cast<size_t>(row) * width_ + col) * static_cast<size_t>(dim_);
  return {data_.data() + base, static_cast<size_t>(dim_)};
}

double compute_adaptive_threshold(const ScoreField& field,
                                  const AdaptiveThresholdState& state) {
  const auto& s = field.scores.data;
  double mean = 0.0;
  for (float v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (float v : s) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(s.size());
  const double sigmoid =
      1.0 / (1.0 + std::exp(-state.mu2 * state.last_match_count));
  return mean + std::sqrt(var) / 2.0 + state.mu1 * sigmoid;
}

std::vector<ScoreCandidate> filter_scores(const ScoreField& field, double th,
                                          int nms_radius) {
  std::vector<ScoreCandidate> passing;
  const ImageF& s = field.scores;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.at(r, c) > th) passing.push_back({r, c, s.at(r, c)});

  if (nms_radius <= 0 || passing.size() <= 1) return passing;

  std::sort(passing.begin(), passing.end(),
            [](const ScoreCandidate& a, const ScoreCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.row != b.row) return a.row < b.row;
              return a.col < b.col;
            });

  // Greedy suppression on a coarse occupancy grid to keep this linear-ish.
  const int r2 = nms_radius * nms_radius;
  const int cell = std::max(1, nms_radius);
  const int gw = (s.width + cell - 1) / cell;
  const int gh = (s.height + cell - 1) / cell;
  std::vector<std::vector<int>> buckets(static_cast<size_t>(gw) * gh);
  std::vector<ScoreCandidate> kept;
  kept.reserve(passing.size());
  for (const auto& cand : passing) {
    const int gr = cand.row / cell;
    const int gc = cand.col / cell;
    bool suppressed = false;
    for (int br = std::max(0, gr - 1); br <= std::min(gh - 1, gr + 1) && !suppressed; ++br) {
      for (int bc = std::max(0, gc - 1); bc <= std::min(gw - 1, gc + 1) && !suppressed; ++bc) {
        for (int idx : buckets[static_cast<size_t>(br) * gw + bc]) {
          const int dr = kept[idx].row - cand.row;
          const int dc = kept[idx].col - cand.col;
          if (dr * dr + dc * dc <= r2) {
            suppressed = true;
            break;
          }
        }
      }
    }
    if (!suppressed) {
      buckets[static_cast<size_t>(gr) * gw + gc].push_back(
          static_cast<int>(kept.size()));
      kept.push_back(cand);
    }
  }
  // Restore deterministic row-major order.
  std::sort(kept.begin(), kept.end(),
            [](const ScoreCandidate& a, const ScoreCandidate& b) {
              if (a.row != b.row) return a.row < b.row;
              return a.col < b.col;
            });
  return kept;
}

std::vector<Vec2> rescale_keypoints(std::span<const Vec2> keypoints,
                                    int resized_width, int resized_height,
                                    const PinholeCamera& camera) {
  std::vector<Vec2> out;
  out.reserve(keypoints.size());
  const double sx = static_cast<double>(camera.width) / resized_width;
  const double sy = static_cast<double>(camera.height) / resized_height;
  for (const Vec2& kp : keypoints) {
    out.emplace_back(std::clamp(kp.x() * sx, 0.0, camera.width - 1.0),
                     std::clamp(kp.y() * sy, 0.0, camera.height - 1.0));
  }
  return out;
}

namespace {

// Log-parabola vertex offset from three positive samples (left, center,
// right); exact for Gaussian peaks, zero on flat or degenerate neighborhoods.
inline double parabola_offset(float left, float center, float right) {
  if (left <= 0.f || center <= 0.f || right <= 0.f) return 0.0;
  const double l = std::log(left), c = std::log(center), r = std::log(right);
  const double denom = l + r - 2.0 * c;
  if (denom >= -1e-12) return 0.0;  // not a strict maximum
  return std::clamp((l - r) / (2.0 * denom), -0.5, 0.5);
}

}  // namespace

Vec2 refine_peak(const ImageF& scores, int row, int col) {
  Vec2 out(col, row);
  if (row <= 0 || col <= 0 || row >= scores.height - 1 ||
      col >= scores.width - 1)
    return out;
  out.x() += parabola_offset(scores.at(row, col - 1), scores.at(row, col),
                             scores.at(row, col + 1));
  out.y() += parabola_offset(scores.at(row - 1, col), scores.at(row, col),
                             scores.at(row + 1, col));
  return out;
}

namespace {

// Catmull-Rom kernel weights for fractional offset t.
inline void cubic_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace

void sample_descriptor(const DescriptorGrid& grid, double x, double y,
                       int resized_width, int resized_height,
                       std::span<float> out) {
  const int dim = grid.dim();
  // Cell centers are uniformly spread over the resized frame.
  const double gx = (x + 0.5) * grid.width() / resized_width - 0.5;
  const double gy = (y + 0.5) * grid.height() / resized_height - 0.5;
  const int ix = static_cast<int>(std::floor(gx));
  const int iy = static_cast<int>(std::floor(gy));
  double wx[4], wy[4];
  cubic_weights(gx - ix, wx);
  cubic_weights(gy - iy, wy);

  std::fill(out.begin(), out.end(), 0.f);
  std::vector<float> cell(dim);
  for (int dy = -1; dy <= 2; ++dy) {
    const int row = std::clamp(iy + dy, 0, grid.height() - 1);
    for (int dx = -1; dx <= 2; ++dx) {
      const int col = std::clamp(ix + dx, 0, grid.width() - 1);
      const double w = wy[dy + 1] * wx[dx + 1];
      if (w == 0.0) continue;
      grid.cell(row, col, cell);
      for (int k = 0; k < dim; ++k)
        out[k] += static_cast<float>(w) * cell[k];
    }
  }
  double norm = 0.0;
  for (int k = 0; k < dim; ++k) norm += static_cast<double>(out[k]) * out[k];
  norm = std::sqrt(norm);
  if (norm > 1e-12) {
    const float inv = static_cast<float>(1.0 / norm);
    for (int k = 0; k < dim; ++k) out[k] *= inv;
  }
}

Result<FeatureSet> FeatureExtractor::extract(
    const ImageF& image, const PinholeCamera& camera,
    const AdaptiveThresholdState& state) const {
  ImageF resized;
  const ImageF* input = &image;
  if (image.width != state.resized_width ||
      image.height != state.resized_height) {
    resized = resize_bilinear(image, state.resized_width, state.resized_height);
    input = &resized;
  }
  auto field = backend_->detect(*input);
  if (!field) return field.error();
  return extract_from_field(*field, camera, state);
}

FeatureSet FeatureExtractor::extract_from_field(
    const ScoreField& field, const PinholeCamera& camera,
    const AdaptiveThresholdState& state) const {
  FeatureSet out;
  out.image_width = camera.width;
  out.image_height = camera.height;
  if (field.empty()) return out;

  const double th = options_.adaptive_threshold
                        ? compute_adaptive_threshold(field, state)
                        : options_.fixed_threshold;
  const auto candidates = filter_scores(field, th, options_.nms_radius);
  if (candidates.empty()) return out;

  const int dim = field.descriptors ? field.descriptors->dim() : 0;
  out.descriptors.resize(static_cast<int>(candidates.size()), dim);
  std::vector<Vec2> resized_kps;
  resized_kps.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const Vec2 refined = refine_peak(field.scores, cand.row, cand.col);
    resized_kps.push_back(refined);
    out.scores.push_back(cand.score);
    if (dim > 0) {
      sample_descriptor(*field.descriptors, refined.x(), refined.y(),
                        field.scores.width, field.scores.height,
                        std::span<float>(out.descriptors.row(i).data(), dim));
    }
  }
  out.keypoints = rescale_keypoints(resized_kps, field.scores.width,
                                    field.scores.height, camera);
  return out;
}

}  // namespace vslam
