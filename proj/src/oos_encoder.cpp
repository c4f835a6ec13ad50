#include "rmvh/oos_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rmvh/core_math.hpp"
#include "rmvh/hash_trainer.hpp"

namespace rmvh {

namespace {

// Split a concatenated column back into per-view vectors.
std::vector<Vector> split_views(const Vector& x, const KernelLandmarks& landmarks) {
  std::vector<Vector> out;
  Index row = 0;
  for (const auto& v : landmarks.views) {
    out.emplace_back(x.segment(row, v.rows()));
    row += v.rows();
  }
  return out;
}

// Median over centers of the distance to the k-th nearest other center.
double center_bandwidth(const Matrix& centers, Index k_st) {
  const Index z = centers.cols();
  if (z < 2) return 1.0;
  const Index k = std::min(k_st, z - 1);
  std::vector<double> kth;
  std::vector<double> d;
  for (Index i = 0; i < z; ++i) {
    d.clear();
    for (Index j = 0; j < z; ++j)
      if (j != i) d.push_back((centers.col(i) - centers.col(j)).squaredNorm());
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    kth.push_back(std::sqrt(d[k - 1]));
  }
  const std::size_t mid = kth.size() / 2;
  std::nth_element(kth.begin(), kth.begin() + mid, kth.end());
  double median = kth[mid];
  if (kth.size() % 2 == 0) median = 0.5 * (median + *std::max_element(kth.begin(), kth.begin() + mid));
  if (!(median > 0.0)) throw InvalidData("build_base_set: base centers coincide, bandwidth is zero");
  return median;
}

}  // namespace

BaseSet build_base_set(const MultiViewDataset& ds, const HashModel& model, const BaseSetConfig& cfg,
                       std::uint64_t seed) {
  const Index n = ds.num_samples();
  require(cfg.size >= 1, "build_base_set: Z must be >= 1");
  require(cfg.size <= n, "build_base_set: Z = " + std::to_string(cfg.size) + " exceeds N = " + std::to_string(n));
  require(ds.num_views() == model.landmarks.num_views(), "build_base_set: view count mismatch");

  BaseSet base;
  base.centers = kmeans(ds.concatenated(), cfg.size, cfg.kmeans_iters, seed).centers;
  base.k = std::clamp<Index>(cfg.neighbors, 1, base.centers.cols());
  Matrix kernel_cols(model.num_landmarks(), base.centers.cols());
  for (Index j = 0; j < base.centers.cols(); ++j) {
    kernel_cols.col(j) = query_kernel_vector(split_views(base.centers.col(j), model.landmarks), model.landmarks,
                                             model.kernel, model.kernel.query_mode);
  }
  base.embeddings = model.project(kernel_cols);
  base.sigma = center_bandwidth(base.centers, cfg.self_tuning_k);
  return base;
}

Vector inductive_embed(const Vector& x, const Matrix& points, const Matrix& embeddings, Index k, double sigma) {
  const Index n = points.cols();
  require(n >= 1, "inductive_embed: empty reference set");
  require(points.rows() == x.size(), "inductive_embed: query has " + std::to_string(x.size()) +
                                         " dims, reference points have " + std::to_string(points.rows()));
  require(embeddings.rows() == n, "inductive_embed: one embedding row per reference point expected");
  require(k >= 1 && k <= n, "inductive_embed: k = " + std::to_string(k) + " must be in [1, " +
                                std::to_string(n) + "]");
  require(sigma > 0.0, "inductive_embed: sigma must be positive");

  std::vector<double> d(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d[i] = (points.col(i) - x).squaredNorm();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Index a, Index b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });

  Vector acc = Vector::Zero(embeddings.cols());
  double total = 0.0;
  const double inv = 1.0 / (sigma * sigma);
  for (Index p = 0; p < k; ++p) {
    const double w = std::exp(-d[order[p]] * inv);
    acc += w * embeddings.row(order[p]).transpose();
    total += w;
  }
  if (!(total > 0.0)) return embeddings.row(order[0]).transpose();
  return acc / total;
}

Vector prototype_embed(const Vector& x, const BaseSet& base) {
  require(base.size() >= 1, "prototype_embed: empty base set");
  return inductive_embed(x, base.centers, base.embeddings, std::min(base.k, base.size()), base.sigma);
}

CodeMatrix prototype_encode(const Vector& x, const BaseSet& base) {
  return CodeMatrix::from_real(prototype_embed(x, base).transpose());
}

CodeMatrix prototype_encode_all(const MultiViewDataset& ds, const BaseSet& base) {
  const Matrix x = ds.concatenated();
  require(x.rows() == base.centers.rows(), "prototype_encode_all: data have " + std::to_string(x.rows()) +
                                               " concatenated dims, base set expects " +
                                               std::to_string(base.centers.rows()));
  Matrix emb(x.cols(), base.embeddings.cols());
  for (Index i = 0; i < x.cols(); ++i) emb.row(i) = prototype_embed(x.col(i), base).transpose();
  return CodeMatrix::from_real(emb);
}

}  // namespace rmvh
