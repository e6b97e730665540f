#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vslam/features.hpp"
#include "vslam/result.hpp"

namespace vslam {

// Soft partial assignment between two feature sets: values[i,j] in [0,1] is
// the likelihood that feature i of A matches feature j of B. Row and column
// sums stay <= 1.
struct AssignmentMatrix {
  Eigen::MatrixXd values;  // M x N

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

struct Match {
  int index_a = -1;
  int index_b = -1;
  double confidence = 0.0;
};

struct MatchSet {
  std::vector<Match> pairs;
  std::string provenance;  // backend identifier

  int size() const { return static_cast<int>(pairs.size()); }
  bool empty() const { return pairs.empty(); }
};

// Backend contract: keypoints are normalized to [0,1]^2 before invocation.
class MatcherBackend {
 public:
  virtual ~MatcherBackend() = default;
  virtual std::string name() const = 0;
  virtual Result<AssignmentMatrix> match(
      const Eigen::MatrixX2d& normalized_kps_a,
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>& descriptors_a,
      const Eigen::MatrixX2d& normalized_kps_b,
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>& descriptors_b) = 0;
};

// Descriptor-similarity oracle: p_ij = max(0, cos(d_i, d_j))^2, then row and
// column sums are scaled down to satisfy the partial-assignment bounds.
class BruteForceMatcher final : public MatcherBackend {
 public:
  std::string name() const override { return "brute-force"; }
  Result<AssignmentMatrix> match(
      const Eigen::MatrixX2d& normalized_kps_a,
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>& descriptors_a,
      const Eigen::MatrixX2d& normalized_kps_b,
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>& descriptors_b) override;
};

// Runs the backend on two feature sets (normalizing keypoints first).
Result<AssignmentMatrix> match_features(MatcherBackend& backend,
                                        const FeatureSet& set_a,
                                        const FeatureSet& set_b);

// Mutual-best pairs with confidence >= min_confidence; one-to-one by
// construction.
MatchSet extract_matches(const AssignmentMatrix& assignment,
                         double min_confidence,
                         const std::string& provenance = "");

// Projection-guided matching: every A feature has a predicted pixel in B's
// image; only B features strictly inside the radius compete, best cosine
// similarity above min_similarity wins, collisions resolved one-to-one.
MatchSet match_with_prior(const FeatureSet& set_a, const FeatureSet& set_b,
                          std::span<const Vec2> predicted_positions,
                          double radius_px, double min_similarity = 0.45);

}  // namespace vslam
