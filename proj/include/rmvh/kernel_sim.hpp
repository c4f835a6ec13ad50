#pragma once

#include <cstdint>
#include <vector>

#include "rmvh/common.hpp"
#include "rmvh/dataset.hpp"

namespace rmvh {

enum class KernelLandmarkMode { kmeans, uniform_sample };

/// Landmark objects shared across views: views[m] is d_m x R and column r of
/// every block describes the same landmark.
struct KernelLandmarks {
  std::vector<Matrix> views;
  KernelLandmarkMode mode = KernelLandmarkMode::kmeans;

  Index count() const { return views.empty() ? 0 : views.front().cols(); }
  Index num_views() const { return static_cast<Index>(views.size()); }
  Matrix concatenated() const;
};

/// How a query (or any out-of-training sample) is turned into an R-vector.
///  - concat:    one RBF over the concatenated feature space, bandwidth sigma_concat
///  - view_sum:  sum_m K^(m)(x), the training-side K = sum_m K^(m)
///  - view_mean: (1/M) sum_m K^(m)(x), on the same scale as the recovered consensus
enum class QueryKernelMode { concat, view_sum, view_mean };

struct KernelConfig {
  std::vector<double> sigma;  // one per view
  double sigma_concat = 1.0;
  Index self_tuning_k = 7;
  QueryKernelMode query_mode = QueryKernelMode::view_mean;
};

struct KernelizedSimilarity {
  std::vector<Matrix> views;  // K^(m), R x N
  Matrix sum;                 // sum_m K^(m)

  Matrix mean() const { return sum / static_cast<double>(views.size()); }
};

/// uniform_sample picks R distinct training samples (all views of each);
/// kmeans clusters the concatenated space and splits the centers by view.
KernelLandmarks select_kernel_landmarks(const MultiViewDataset& ds, Index count, KernelLandmarkMode mode,
                                        std::uint64_t seed, int kmeans_iters = 15);

/// Median over samples of the distance to the k_st-th nearest landmark.
/// Throws InvalidData when that median is zero.
double self_tuning_sigma(const Matrix& view, const Matrix& landmarks, Index k_st);

/// R x N matrix of exp(-||z_r - x_i||^2 / (2 sigma^2)).
Matrix build_kernel_matrix(const Matrix& view, const Matrix& landmarks, double sigma);

/// Self-tunes one sigma per view and one for the concatenated space.
KernelConfig tune_kernel_config(const MultiViewDataset& ds, const KernelLandmarks& landmarks, Index k_st,
                                QueryKernelMode mode);

KernelizedSimilarity build_kernelized_similarity(const MultiViewDataset& ds, const KernelLandmarks& landmarks,
                                                 const KernelConfig& cfg);

/// R-vector for one sample given as one feature vector per view.
Vector query_kernel_vector(const std::vector<Vector>& x, const KernelLandmarks& landmarks,
                           const KernelConfig& cfg, QueryKernelMode mode);

/// Column-batched form of query_kernel_vector: R x N for the N samples of ds.
Matrix query_kernel_matrix(const MultiViewDataset& ds, const KernelLandmarks& landmarks,
                           const KernelConfig& cfg, QueryKernelMode mode);

/// Per-view feature vectors of sample i.
std::vector<Vector> sample_views(const MultiViewDataset& ds, Index i);

}  // namespace rmvh
