#include "vslam/matching.hpp"

#include <algorithm>
#include <cmath>

namespace vslam {

Result<AssignmentMatrix> BruteForceMatcher::match(
    const Eigen::MatrixX2d& /*normalized_kps_a*/,
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                        Eigen::RowMajor>& descriptors_a,
    const Eigen::MatrixX2d& /*normalized_kps_b*/,
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                        Eigen::RowMajor>& descriptors_b) {
  if (descriptors_a.cols() != descriptors_b.cols())
    return Fail::DimensionMismatch;
  const int m = static_cast<int>(descriptors_a.rows());
  const int n = static_cast<int>(descriptors_b.rows());

  AssignmentMatrix out;
  out.values.resize(m, n);
  const int dim = static_cast<int>(descriptors_a.cols());
  // Explicit accumulation keeps match(B, A) a bit-exact transpose of
  // match(A, B) regardless of the BLAS kernel.
  for (int i = 0; i < m; ++i) {
    const float* da = descriptors_a.row(i).data();
    for (int j = 0; j < n; ++j) {
      const float* db = descriptors_b.row(j).data();
      double dot = 0.0;
      for (int k = 0; k < dim; ++k)
        dot += static_cast<double>(da[k]) * static_cast<double>(db[k]);
      const double c = std::max(0.0, dot);
      out.values(i, j) = c * c;
    }
  }
  // Divide each entry by max(1, row sum, column sum). Both partial-assignment
  // bounds hold afterwards and the result transposes exactly when the inputs
  // are swapped.
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) row_sums(i) += out.values(i, j);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) col_sums(j) += out.values(i, j);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.values(i, j) /= std::max({1.0, row_sums(i), col_sums(j)});
  return out;
}

Result<AssignmentMatrix> match_features(MatcherBackend& backend,
                                        const FeatureSet& set_a,
                                        const FeatureSet& set_b) {
  if (set_a.empty() || set_b.empty()) return Fail::InsufficientData;
  auto normalize = [](const FeatureSet& fs) {
    Eigen::MatrixX2d kps(fs.size(), 2);
    for (int i = 0; i < fs.size(); ++i) {
      kps(i, 0) = fs.keypoints[i].x() / std::max(1, fs.image_width);
      kps(i, 1) = fs.keypoints[i].y() / std::max(1, fs.image_height);
    }
    return kps;
  };
  return backend.match(normalize(set_a), set_a.descriptors, normalize(set_b),
                       set_b.descriptors);
}

MatchSet extract_matches(const AssignmentMatrix& assignment,
                         double min_confidence,
                         const std::string& provenance) {
  MatchSet out;
  out.provenance = provenance;
  const int m = assignment.rows();
  const int n = assignment.cols();
  if (m == 0 || n == 0) return out;

  std::vector<int> best_col(m, -1);
  std::vector<int> best_row(n, -1);
  for (int i = 0; i < m; ++i) {
    double best = -1.0;
    for (int j = 0; j < n; ++j) {
      if (assignment.values(i, j) > best) {
        best = assignment.values(i, j);
        best_col[i] = j;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    double best = -1.0;
    for (int i = 0; i < m; ++i) {
      if (assignment.values(i, j) > best) {
        best = assignment.values(i, j);
        best_row[j] = i;
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    const int j = best_col[i];
    if (j < 0 || best_row[j] != i) continue;
    const double p = assignment.values(i, j);
    if (p >= min_confidence) out.pairs.push_back({i, j, p});
  }
  return out;
}

MatchSet match_with_prior(const FeatureSet& set_a, const FeatureSet& set_b,
                          std::span<const Vec2> predicted_positions,
                          double radius_px, double min_similarity) {
  MatchSet out;
  out.provenance = "prior-window";
  if (set_a.empty() || set_b.empty()) return out;
  assert(predicted_positions.size() == static_cast<size_t>(set_a.size()));

  const double r2 = radius_px * radius_px;
  struct Claim {
    int index_a = -1;
    double similarity = -1.0;
  };
  std::vector<Claim> claims(set_b.size());

  for (int i = 0; i < set_a.size(); ++i) {
    const Vec2& pred = predicted_positions[i];
    int best_j = -1;
    double best_sim = min_similarity;
    for (int j = 0; j < set_b.size(); ++j) {
      if ((set_b.keypoints[j] - pred).squaredNorm() >= r2) continue;
      const double sim =
          set_a.descriptors.row(i).dot(set_b.descriptors.row(j));
      if (sim > best_sim) {
        best_sim = sim;
        best_j = j;
      }
    }
    if (best_j >= 0 && best_sim > claims[best_j].similarity) {
      claims[best_j] = {i, best_sim};
    }
  }
  for (int j = 0; j < set_b.size(); ++j) {
    if (claims[j].index_a >= 0)
      out.pairs.push_back({claims[j].index_a, j, claims[j].similarity});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const Match& a, const Match& b) { return a.index_a < b.index_a; });
  return out;
}

}  // namespace vslam
