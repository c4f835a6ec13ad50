#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rmvh/common.hpp"

namespace rmvh {

enum class LandmarkMode { kmeans, uniform };

/// Sparse truncated sample-to-landmark affinity of one view, representing
/// the adjacency S = F diag(lambda)^-1 F^T in factored form.
///
/// F is N x L with exactly k stored entries per row (`neighbors` / `weights`,
/// row-major, k per row). Each row sums to one. Construction guarantees that
/// every landmark has positive column mass, i.e. lambda > 0.
struct AnchorGraph {
  Matrix landmarks;              // d x L
  std::vector<Index> neighbors;  // N * k landmark indices, ascending distance per row
  std::vector<double> weights;   // N * k
  Vector lambda;                 // L, column sums of F
  double bandwidth = 1.0;        // t
  Index k = 0;

  Index num_samples() const { return k == 0 ? 0 : static_cast<Index>(neighbors.size()) / k; }
  Index num_landmarks() const { return landmarks.cols(); }

  /// Dense F (N x L); for tests and small diagnostics.
  Matrix dense_affinity() const;
  /// Dense S (N x N). Refuses N > 5000.
  Matrix dense_adjacency() const;
};

/// L landmark columns. kmeans mode runs a capped Lloyd loop; uniform mode
/// samples L distinct data columns.
Matrix select_graph_landmarks(const Matrix& view, Index num_landmarks, LandmarkMode mode,
                              std::uint64_t seed, int kmeans_iters = 15);

/// Default bandwidth: mean squared distance from each sample to its k-th
/// nearest landmark.
double default_bandwidth(const Matrix& view, const Matrix& landmarks, Index k);

/// Builds F with F_ij proportional to exp(-||x_i - u_j||^2 / t) over the k
/// nearest landmarks (ties to the lower index). Weights are evaluated
/// relative to the nearest landmark, which is algebraically identical after
/// normalization and immune to underflow. Landmarks that end up with zero
/// column mass are dropped and the graph is rebuilt.
AnchorGraph build_truncated_affinity(const Matrix& view, const Matrix& landmarks, Index k,
                                     std::optional<double> bandwidth = std::nullopt);

/// F^T V (L x c) for V with N rows.
Matrix affinity_transpose_apply(const AnchorGraph& g, const Matrix& v);
/// F U (N x c) for U with L rows.
Matrix affinity_apply(const AnchorGraph& g, const Matrix& u);

/// S V = F (Lambda^-1 (F^T V)) without forming S. O(N k c).
Matrix adjacency_apply(const AnchorGraph& g, const Matrix& v);

/// (I - S) V. S has unit row sums, so the degree matrix is the identity.
Matrix laplacian_apply(const AnchorGraph& g, const Matrix& v);

/// Top `count` eigenvectors (N x count) of the view-averaged adjacency
/// (1/M) sum_m S_m, skipping the trivial constant eigenvector, scaled to
/// column norm sqrt(N). Solved through the (sum L_m)-sized Gram problem of
/// G = [F_1 Lambda_1^-1/2, ..., F_M Lambda_M^-1/2] / sqrt(M). Returns fewer
/// columns when the graphs do not carry `count` non-trivial directions.
Matrix spectral_embedding(const std::vector<AnchorGraph>& graphs, Index count);

}  // namespace rmvh
