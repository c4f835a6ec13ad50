#include "rmvh/kernel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rmvh/core_math.hpp"

namespace rmvh {

Matrix KernelLandmarks::concatenated() const {
  Index d = 0;
  for (const auto& v : views) d += v.rows();
  Matrix out(d, count());
  Index row = 0;
  for (const auto& v : views) {
    out.middleRows(row, v.rows()) = v;
    row += v.rows();
  }
  return out;
}

KernelLandmarks select_kernel_landmarks(const MultiViewDataset& ds, Index count, KernelLandmarkMode mode,
                                        std::uint64_t seed, int kmeans_iters) {
  const Index n = ds.num_samples();
  require(count >= 1 && count <= n, "select_kernel_landmarks: R = " + std::to_string(count) +
                                        " must be in [1, N = " + std::to_string(n) + "]");
  KernelLandmarks out;
  out.mode = mode;
  if (mode == KernelLandmarkMode::uniform_sample) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (Index i = 0; i < count; ++i) {
      std::uniform_int_distribution<Index> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    for (const auto& v : ds.views) out.views.push_back(v(Eigen::all, idx));
    return out;
  }
  const Matrix centers = kmeans(ds.concatenated(), count, kmeans_iters, seed).centers;
  Index row = 0;
  for (const auto& v : ds.views) {
    out.views.push_back(centers.middleRows(row, v.rows()));
    row += v.rows();
  }
  return out;
}

double self_tuning_sigma(const Matrix& view, const Matrix& landmarks, Index k_st) {
  require(view.rows() == landmarks.rows(), "self_tuning_sigma: dimension mismatch");
  require(k_st >= 1 && k_st <= landmarks.cols(), "self_tuning_sigma: k_st = " + std::to_string(k_st) +
                                                     " must be in [1, R = " +
                                                     std::to_string(landmarks.cols()) + "]");
  require(view.cols() >= 1, "self_tuning_sigma: no samples");
  std::vector<double> kth(static_cast<std::size_t>(view.cols()));
  std::vector<double> d(static_cast<std::size_t>(landmarks.cols()));
  for (Index i = 0; i < view.cols(); ++i) {
    for (Index r = 0; r < landmarks.cols(); ++r) d[r] = (view.col(i) - landmarks.col(r)).squaredNorm();
    std::nth_element(d.begin(), d.begin() + (k_st - 1), d.end());
    kth[i] = std::sqrt(d[k_st - 1]);
  }
  const std::size_t mid = kth.size() / 2;
  std::nth_element(kth.begin(), kth.begin() + mid, kth.end());
  double median = kth[mid];
  if (kth.size() % 2 == 0) {
    const double lower = *std::max_element(kth.begin(), kth.begin() + mid);
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) {
    throw InvalidData("self_tuning_sigma: median distance to the " + std::to_string(k_st) +
                      "-th nearest landmark is zero; the data are degenerate");
  }
  return median;
}

Matrix build_kernel_matrix(const Matrix& view, const Matrix& landmarks, double sigma) {
  require(view.rows() == landmarks.rows(), "build_kernel_matrix: view has " + std::to_string(view.rows()) +
                                               " dims, landmarks have " + std::to_string(landmarks.rows()));
  require(sigma > 0.0, "build_kernel_matrix: sigma must be positive");
  const double scale = -1.0 / (2.0 * sigma * sigma);
  Matrix k(landmarks.cols(), view.cols());
  for (Index i = 0; i < view.cols(); ++i)
    for (Index r = 0; r < landmarks.cols(); ++r)
      k(r, i) = std::exp(scale * (view.col(i) - landmarks.col(r)).squaredNorm());
  return k;
}

KernelConfig tune_kernel_config(const MultiViewDataset& ds, const KernelLandmarks& landmarks, Index k_st,
                                QueryKernelMode mode) {
  require(landmarks.num_views() == ds.num_views(), "tune_kernel_config: view count mismatch");
  KernelConfig cfg;
  cfg.self_tuning_k = k_st;
  cfg.query_mode = mode;
  for (Index m = 0; m < ds.num_views(); ++m)
    cfg.sigma.push_back(self_tuning_sigma(ds.views[m], landmarks.views[m], k_st));
  cfg.sigma_concat = self_tuning_sigma(ds.concatenated(), landmarks.concatenated(), k_st);
  return cfg;
}

KernelizedSimilarity build_kernelized_similarity(const MultiViewDataset& ds, const KernelLandmarks& landmarks,
                                                 const KernelConfig& cfg) {
  require(landmarks.num_views() == ds.num_views() && static_cast<Index>(cfg.sigma.size()) == ds.num_views(),
          "build_kernelized_similarity: view count mismatch");
  KernelizedSimilarity ks;
  ks.sum = Matrix::Zero(landmarks.count(), ds.num_samples());
  for (Index m = 0; m < ds.num_views(); ++m) {
    ks.views.push_back(build_kernel_matrix(ds.views[m], landmarks.views[m], cfg.sigma[m]));
    ks.sum += ks.views.back();
  }
  return ks;
}

Vector query_kernel_vector(const std::vector<Vector>& x, const KernelLandmarks& landmarks,
                           const KernelConfig& cfg, QueryKernelMode mode) {
  const Index m_views = landmarks.num_views();
  require(static_cast<Index>(x.size()) == m_views, "query_kernel_vector: query has " +
                                                       std::to_string(x.size()) + " views, model expects " +
                                                       std::to_string(m_views));
  for (Index m = 0; m < m_views; ++m) {
    require(x[m].size() == landmarks.views[m].rows(),
            "query_kernel_vector: view " + std::to_string(m) + " has " + std::to_string(x[m].size()) +
                " dims, expected " + std::to_string(landmarks.views[m].rows()));
  }
  const Index r_count = landmarks.count();
  Vector out = Vector::Zero(r_count);
  if (mode == QueryKernelMode::concat) {
    const double scale = -1.0 / (2.0 * cfg.sigma_concat * cfg.sigma_concat);
    for (Index r = 0; r < r_count; ++r) {
      double d2 = 0.0;
      for (Index m = 0; m < m_views; ++m) d2 += (x[m] - landmarks.views[m].col(r)).squaredNorm();
      out(r) = std::exp(scale * d2);
    }
    return out;
  }
  for (Index m = 0; m < m_views; ++m) {
    const double scale = -1.0 / (2.0 * cfg.sigma[m] * cfg.sigma[m]);
    for (Index r = 0; r < r_count; ++r) out(r) += std::exp(scale * (x[m] - landmarks.views[m].col(r)).squaredNorm());
  }
  if (mode == QueryKernelMode::view_mean) out /= static_cast<double>(m_views);
  return out;
}

std::vector<Vector> sample_views(const MultiViewDataset& ds, Index i) {
  std::vector<Vector> x;
  for (const auto& v : ds.views) x.emplace_back(v.col(i));
  return x;
}

Matrix query_kernel_matrix(const MultiViewDataset& ds, const KernelLandmarks& landmarks,
                           const KernelConfig& cfg, QueryKernelMode mode) {
  Matrix out(landmarks.count(), ds.num_samples());
  for (Index i = 0; i < ds.num_samples(); ++i)
    out.col(i) = query_kernel_vector(sample_views(ds, i), landmarks, cfg, mode);
  return out;
}

}  // namespace rmvh
